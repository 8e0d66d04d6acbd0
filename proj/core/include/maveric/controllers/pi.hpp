#pragma once

#include <optional>
#include <utility>

#include "maveric/config.hpp"
#include "maveric/sim/types.hpp"

namespace maveric::controllers {

struct PiState {
  double integral = 0.0;
};

/// Velocity PI: accel = clamp(kp_v e + ki_v ∫e), e = v_des - v, with
/// conditional integration so the integral never winds up while saturated.
std::pair<double, PiState> pi_velocity(const sim::VehicleState& ego,
                                       double v_des,
                                       const ControllerConfig& gains,
                                       const SimConfig& limits, PiState state,
                                       double dt);

/// Follow PI: combines gap error (d_x - f_des, shaped to [-25, +5] so a large
/// positive gap cannot command acceleration into a slower lead) with the
/// relative-speed error. f_des is floored at f_min. Whenever
/// d_x < max(f_min, tau_min v) the output is maximal braking.
std::pair<double, PiState> pi_follow(const sim::VehicleState& ego,
                                     const std::optional<sim::VehicleState>& lead,
                                     double f_des,
                                     const ControllerConfig& gains,
                                     const SimConfig& limits, PiState state,
                                     double dt);

}  // namespace maveric::controllers
