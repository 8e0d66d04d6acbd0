#include "maveric/stylespace/traversal.hpp"

#include <algorithm>
#include <cmath>

#include "maveric/errors.hpp"

namespace maveric::stylespace {

using Eigen::Vector3d;

Vector3d aggression_gradient(const learn::ModelParams& params) {
  if (params.style.W.rows() != 3 || params.style.W.cols() != 1)
    throw std::invalid_argument("style head must be 3x1");
  Vector3d a = params.style.W.col(0);
  const double n = a.norm();
  if (n < 1e-12) throw DegenerateStyleHead("style head weights are zero");
  return a / n;
}

ShiftResult shift_style(const learn::ModelParams& params,
                        const Vector3d& w, double delta_adb) {
  const Vector3d g = aggression_gradient(params);
  learn::MavericNet net(params);
  ShiftResult res;
  res.adb_before = net.predict_style(w);
  const double target =
      std::clamp(res.adb_before + delta_adb, 11.0, 55.0);
  // Raw score is adb_offset + adb_span * (w . a + b), so moving along g by
  // (target - before) / (adb_span * |a|) lands on the target exactly.
  const double slope = params.norm.adb_span * params.style.W.col(0).norm();
  res.w = w + ((target - res.adb_before) / slope) * g;
  res.adb_after = net.predict_style(res.w);
  return res;
}

PerpSample perpendicular_sample(const learn::ModelParams& params,
                                const Vector3d& w, double angle_deg) {
  const Vector3d g = aggression_gradient(params);

  // In-plane frame: project a coordinate axis off g, complete with the cross.
  Vector3d seed = Vector3d::UnitX();
  if (std::abs(seed.dot(g)) > 0.9) seed = Vector3d::UnitY();
  Vector3d u1 = (seed - seed.dot(g) * g).normalized();
  const Vector3d u2 = g.cross(u1);

  if (params.embeddings.rows() < 2)
    throw InsufficientSpread("need at least two training embeddings");
  Eigen::VectorXd p1 = params.embeddings * u1;
  Eigen::VectorXd p2 = params.embeddings * u2;
  const auto sd = [](const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() /
                     static_cast<double>(v.size() - 1));
  };
  const double sigma1 = sd(p1);
  const double sigma2 = sd(p2);
  if (sigma1 < 1e-9 || sigma2 < 1e-9)
    throw InsufficientSpread("training embeddings are collinear with the gradient");

  const double rad = angle_deg * M_PI / 180.0;
  PerpSample out;
  out.w = w + sigma1 * std::cos(rad) * u1 + sigma2 * std::sin(rad) * u2;
  out.axis_u1 = u1;
  out.axis_u2 = u2;
  out.sigma1 = sigma1;
  out.sigma2 = sigma2;
  out.adb = learn::MavericNet(params).predict_style(out.w);
  return out;
}

double project_on_gradient(const learn::ModelParams& params,
                           const Vector3d& w) {
  return w.dot(aggression_gradient(params));
}

}  // namespace maveric::stylespace
