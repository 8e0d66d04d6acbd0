#include "maveric/controllers/pi.hpp"

#include <algorithm>
#include <cmath>

#include "maveric/errors.hpp"

namespace maveric::controllers {
namespace {

// Integrate e only when doing so would not push a saturated output further
// into saturation.
double step_integral(double integral, double e, double unsat, double lo,
                     double hi, double dt) {
  const bool winding_high = unsat > hi && e > 0.0;
  const bool winding_low = unsat < lo && e < 0.0;
  if (winding_high || winding_low) return integral;
  return integral + e * dt;
}

}  // namespace

std::pair<double, PiState> pi_velocity(const sim::VehicleState& ego,
                                       double v_des,
                                       const ControllerConfig& gains,
                                       const SimConfig& limits, PiState state,
                                       double dt) {
  const double e = v_des - ego.v;
  const double unsat = gains.kp_v * e + gains.ki_v * (state.integral + e * dt);
  state.integral = step_integral(state.integral, e, unsat, limits.accel_min,
                                 limits.accel_max, dt);
  const double accel =
      std::clamp(gains.kp_v * e + gains.ki_v * state.integral,
                 limits.accel_min, limits.accel_max);
  return {accel, state};
}

std::pair<double, PiState> pi_follow(const sim::VehicleState& ego,
                                     const std::optional<sim::VehicleState>& lead,
                                     double f_des,
                                     const ControllerConfig& gains,
                                     const SimConfig& limits, PiState state,
                                     double dt) {
  if (!lead) throw InvalidState("pi_follow: no lead vehicle");
  f_des = std::max(f_des, gains.f_min);

  const double d_x = lead->x - ego.x;
  if (d_x < std::max(gains.f_min, gains.tau_min * ego.v)) {
    state.integral = 0.0;
    return {limits.accel_min, state};
  }

  const double e_gap = std::clamp(d_x - f_des, -25.0, 5.0);
  const double e_v = lead->v - ego.v;
  const double unsat = gains.kp_f * e_gap + gains.kv_f * e_v +
                       gains.ki_f * (state.integral + e_gap * dt);
  state.integral = step_integral(state.integral, e_gap, unsat, limits.accel_min,
                                 limits.accel_max, dt);
  const double accel = std::clamp(
      gains.kp_f * e_gap + gains.kv_f * e_v + gains.ki_f * state.integral,
      limits.accel_min, limits.accel_max);
  return {accel, state};
}

}  // namespace maveric::controllers
