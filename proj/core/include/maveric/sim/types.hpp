#pragma once

#include <vector>

namespace maveric::sim {

struct VehicleState {
  double x = 0.0;        // m, longitudinal
  double y = 0.0;        // m, lateral (lane 0 centerline at 0)
  double v = 0.0;        // m/s
  double heading = 0.0;  // rad, 0 = road axis
  int lane = 0;          // 0 right, 1 left

  // Bookkeeping beyond the observable state: identity survives sorting, and
  // cruise_v is the scheduled speed a traffic vehicle returns to once its
  // no-rear-end clamp releases. Neither is exported in traces.
  int id = -1;
  double cruise_v = 0.0;
};

struct WorldState {
  double time = 0.0;  // s
  VehicleState ego;
  std::vector<VehicleState> traffic;  // sorted by x ascending
  double posted_speed = 0.0;          // m/s
};

struct FeatureWindow {
  std::vector<double> v_ev;  // ego speed, length W
  std::vector<double> v_lv;  // lead speed (posted_speed sentinel), length W
  std::vector<double> d_x;   // lead-minus-ego gap, clamped to d_max, length W
  std::vector<double> d_y;   // lead-minus-ego lateral offset, length W
};

}  // namespace maveric::sim
