#pragma once

namespace maveric {

/// Network outputs consumed by the low-level controllers.
struct ControlTargets {
  double f_hat = 0.0;  // desired following distance, m
  double l_hat = 0.0;  // lane-change probability in [0,1]
  double v_hat = 0.0;  // desired velocity, m/s
  double s_hat = 0.0;  // predicted ADB score, points
};

}  // namespace maveric
