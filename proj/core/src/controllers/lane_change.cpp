#include "maveric/controllers/lane_change.hpp"

#include <algorithm>
#include <cmath>

namespace maveric::controllers {

double LaneChangePath::y_at(double x) const {
  const double u = std::clamp((x - x_start()) / length, 0.0, 1.0);
  const double y0 = control[0][1];
  const double y1 = control[3][1];
  return y0 + (y1 - y0) * u * u * (3.0 - 2.0 * u);
}

double LaneChangePath::heading_at(double x) const {
  const double u = std::clamp((x - x_start()) / length, 0.0, 1.0);
  const double y0 = control[0][1];
  const double y1 = control[3][1];
  const double dydx = (y1 - y0) * 6.0 * u * (1.0 - u) / length;
  return std::atan(dydx);
}

std::optional<LaneChangePath> plan_lane_change(
    const sim::VehicleState& ego, const std::optional<sim::VehicleState>& lead,
    int target_lane, double v, const ControllerConfig& gains,
    const SimConfig& limits) {
  const double L = std::max(gains.lane_change_len_per_speed * v,
                            gains.lane_change_min_len);
  const double y_src = ego.lane * limits.lane_width;
  const double y_tgt = target_lane * limits.lane_width;

  if (lead && lead->x > ego.x) {
    // The ego occupies the source lane until roughly 60% of the path; the
    // current lead must not close to within f_min + 2 m in that window.
    const double g0 = lead->x - ego.x;
    const double closing = std::max(0.0, ego.v - lead->v) + 1.0;
    const double t_clear = 0.6 * L / std::max(v, 1.0);
    if (g0 < gains.f_min || g0 - closing * t_clear < gains.f_min + 2.0)
      return std::nullopt;
  }

  LaneChangePath path;
  path.control = {{{ego.x, y_src},
                   {ego.x + L / 3.0, y_src},
                   {ego.x + 2.0 * L / 3.0, y_tgt},
                   {ego.x + L, y_tgt}}};
  path.target_lane = target_lane;
  path.length = L;
  return path;
}

std::optional<double> track_path(const sim::VehicleState& ego,
                                 const LaneChangePath& path, double stanley_k,
                                 const SimConfig& limits) {
  if (ego.x >= path.x_end()) return std::nullopt;
  const double heading_err = path.heading_at(ego.x) - ego.heading;
  const double cte = path.y_at(ego.x) - ego.y;
  const double steer =
      heading_err + std::atan(stanley_k * cte / std::max(ego.v, 1.0));
  return std::clamp(steer, -limits.steer_max, limits.steer_max);
}

}  // namespace maveric::controllers
