#pragma once

#include <array>
#include <optional>

#include "maveric/config.hpp"
#include "maveric/sim/types.hpp"

namespace maveric::controllers {

/// Cubic Bezier lane-change path. With the control points used here the
/// curve reduces to x(t) = x0 + L t and y(t) = y0 + (y1-y0) t^2 (3 - 2t):
/// road-parallel tangents at both ends and monotone in x.
struct LaneChangePath {
  std::array<std::array<double, 2>, 4> control;  // P0..P3, (x, y)
  int target_lane = 0;
  double length = 0.0;

  double x_start() const { return control[0][0]; }
  double x_end() const { return control[3][0]; }
  double y_at(double x) const;
  double heading_at(double x) const;
};

/// Plans a path of length L = max(len_per_speed v, min_len) from the source
/// lane centerline to the target's. Returns nullopt (maneuver rejected) when
/// the current-lane lead is predicted to intrude on the path corridor while
/// the ego is still clearing the source lane.
std::optional<LaneChangePath> plan_lane_change(
    const sim::VehicleState& ego, const std::optional<sim::VehicleState>& lead,
    int target_lane, double v, const ControllerConfig& gains,
    const SimConfig& limits);

/// Stanley law: steer = heading_error + atan(k cte / v), clamped to actuator
/// limits. Returns nullopt once the ego is past the path end.
std::optional<double> track_path(const sim::VehicleState& ego,
                                 const LaneChangePath& path, double stanley_k,
                                 const SimConfig& limits);

}  // namespace maveric::controllers
