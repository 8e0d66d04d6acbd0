#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "maveric/config.hpp"
#include "maveric/rng.hpp"
#include "maveric/sim/types.hpp"

namespace maveric::sim {

/// Permutation of the six scheduled lead speeds
/// {0.85 v_e, 0.9 v_e, 0.97 v_e, 0.9 s, s, 1.1 s}. Same seed, same order.
std::vector<double> spawn_lead_schedule(double ego_target_speed,
                                        double posted_speed,
                                        std::uint64_t seed);

/// One integration step: ego by the kinematic bicycle model, traffic at
/// constant speed along the road axis. Pure; traffic management (spawning,
/// recycling, rear-end clamping) lives in Simulation. Commands are clamped
/// to actuator limits; NaN commands throw.
WorldState step_world(const WorldState& world, double ego_accel,
                      double ego_steer, double dt, const SimConfig& cfg);

/// Nearest same-lane vehicle ahead of ego, if any within cfg.d_max.
std::optional<VehicleState> find_lead(const WorldState& world,
                                      const SimConfig& cfg);

/// Nearest same-lane vehicle behind ego, if any (no distance cap).
std::optional<VehicleState> find_rear(const WorldState& world);

/// Last W samples of (v_ev, v_lv, d_x, d_y) from the history. Sentinels when
/// no lead: d_x = d_max, v_lv = posted_speed, and d_y falls back to the offset
/// from the right-lane centerline so road position stays observable.
FeatureWindow observe(const std::vector<WorldState>& history, int W,
                      const SimConfig& cfg);

/// True when any two vehicles (ego included) overlap in both axes.
bool any_collision(const WorldState& world, const SimConfig& cfg);

/// Owns the traffic schedule for one episode: lead-vehicle cycling in the
/// ego's home lane and Poisson-spaced left-lane traffic at posted speed.
class Simulation {
 public:
  Simulation(const SimConfig& cfg, double ego_target_speed, std::uint64_t seed);

  const WorldState& world() const { return world_; }

  /// Advance one dt: clamp traffic speeds against their own leads, integrate,
  /// then recycle the scheduled lead and extend left-lane traffic.
  void step(double ego_accel, double ego_steer);

 private:
  void clamp_traffic_speeds();
  void manage_lead();
  void extend_offlane_traffic();
  void prune();
  double next_lead_speed();
  void spawn_lead(double ahead_of_ego);

  SimConfig cfg_;
  double ego_target_speed_;
  Rng rng_;
  WorldState world_;
  std::vector<double> schedule_;
  std::size_t schedule_pos_ = 0;
  int current_lead_id_ = -1;
  int next_id_ = 0;
  double offlane_frontier_;  // x of the next left-lane spawn
};

}  // namespace maveric::sim
