#pragma once

#include <vector>

#include <Eigen/Dense>

#include "maveric/config.hpp"
#include "maveric/learn/network.hpp"
#include "maveric/sim/trace.hpp"

namespace maveric::learn {

/// One training window: normalized feature channels ending at step t plus the
/// labels taken at t.
struct Sample {
  Eigen::VectorXd v_ev, v_lv, d_x, d_y;
  int persona_idx = 0;
  double f_target_n = 0.0;
  bool follow_active = false;  // lead inside lambda at t
  bool l_label = false;
  double v_target_n = 0.0;
  double adb_raw = 0.0;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<std::string> persona_ids;
  std::vector<double> persona_adb;
  double class_weight_neg = 1.0;
  double class_weight_pos = 1.0;
};

/// Slides windows over each trace (stride from config), normalizes channels,
/// derives labels (l from the lane-change flag, f from the gap while inside
/// lambda, v from ego speed), and holds out the tail val_fraction of each
/// trace. Traces are ordered by persona id; lane-change class weights are
/// inverse-frequency over the training split.
Dataset build_dataset(std::vector<sim::Trace> traces, const Config& cfg,
                      const Normalization& norm, double val_fraction);

}  // namespace maveric::learn
