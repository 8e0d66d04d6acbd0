#pragma once

#include <Eigen/Dense>

#include "maveric/learn/network.hpp"

namespace maveric::stylespace {

// Unit direction in embedding space along which the style head's raw score
// increases fastest. Throws DegenerateStyleHead if the head weights are zero.
Eigen::Vector3d aggression_gradient(const learn::ModelParams& params);

struct ShiftResult {
  Eigen::Vector3d w;
  double adb_before = 0.0;
  double adb_after = 0.0;
};

// Moves w along the aggression gradient so the style head reads exactly
// clamp(adb_before + delta_adb, 11, 55). Exact because the head is affine.
ShiftResult shift_style(const learn::ModelParams& params,
                        const Eigen::Vector3d& w, double delta_adb);

struct PerpSample {
  Eigen::Vector3d w;
  double adb = 0.0;
  Eigen::Vector3d axis_u1;
  Eigen::Vector3d axis_u2;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

// Samples the ellipse through w in the plane perpendicular to the aggression
// gradient. Radii are the standard deviations of the training embeddings
// projected on the two in-plane axes. Throws InsufficientSpread when the
// training embeddings are too collinear to define the ellipse.
PerpSample perpendicular_sample(const learn::ModelParams& params,
                                const Eigen::Vector3d& w, double angle_deg);

// Scalar coordinate of w along the aggression gradient.
double project_on_gradient(const learn::ModelParams& params,
                           const Eigen::Vector3d& w);

}  // namespace maveric::stylespace
