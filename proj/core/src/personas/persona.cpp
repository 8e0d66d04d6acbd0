#include "maveric/personas/persona.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maveric/sim/world.hpp"

namespace maveric::personas {

PersonaParams persona_base(double adb_score, const PersonaConfig& cfg) {
  if (adb_score < 11.0 || adb_score > 55.0)
    throw std::invalid_argument("adb_score outside [11, 55]");
  const double u = (adb_score - 11.0) / 44.0;
  PersonaParams p;
  p.adb_score = adb_score;
  p.target_speed = 22.0 + 12.0 * u;
  p.desired_follow = 60.0 - 40.0 * u;
  p.pass_headway_time = 4.0 - 2.5 * u;
  p.merge_back_gap = 50.0 - 30.0 * u;
  p.speed_jitter = cfg.speed_jitter;
  return p;
}

PersonaParams make_persona(double adb_score, std::uint64_t seed,
                           const PersonaConfig& cfg) {
  PersonaParams p = persona_base(adb_score, cfg);
  Rng rng(Rng::derive(seed, 3));
  // Jitter is a fraction of each parameter's span (not of its value), which
  // keeps the score ordering intact between grid points.
  const double j = cfg.param_jitter;
  p.target_speed += rng.uniform(-j, j) * 12.0;
  p.desired_follow += rng.uniform(-j, j) * 40.0;
  p.pass_headway_time += rng.uniform(-j, j) * 2.5;
  p.merge_back_gap += rng.uniform(-j, j) * 30.0;
  p.target_speed = std::clamp(p.target_speed, 20.0, 36.0);
  p.desired_follow = std::max(p.desired_follow, 10.0);
  p.pass_headway_time = std::max(p.pass_headway_time, 0.5);
  p.merge_back_gap = std::max(p.merge_back_gap, 8.0);
  return p;
}

namespace {

const sim::VehicleState* nearest_behind(const sim::WorldState& world,
                                        int lane) {
  const sim::VehicleState* best = nullptr;
  for (const sim::VehicleState& t : world.traffic) {
    if (t.lane != lane || t.x >= world.ego.x) continue;
    if (!best || t.x > best->x) best = &t;
  }
  return best;
}

}  // namespace

ControlTargets PersonaPolicy::targets(const sim::WorldState& world,
                                      bool lane_change_active,
                                      std::optional<int> lane_change_target) {
  const double dt = sim_cfg_.dt;
  ou_ += cfg_.ou_theta * (0.0 - ou_) * dt +
         p_.speed_jitter * std::sqrt(dt) * rng_.normal();

  const int effective_lane =
      lane_change_active && lane_change_target ? *lane_change_target
                                               : world.ego.lane;
  const double boost =
      effective_lane == 1 ? 1.0 + cfg_.pass_boost_frac : 1.0;

  ControlTargets t;
  t.v_hat = std::max(0.0, p_.target_speed * boost + ou_);
  t.f_hat = p_.desired_follow;
  t.s_hat = p_.adb_score;
  t.l_hat = 0.0;

  if (!lane_change_active) {
    if (world.ego.lane == 0) {
      if (auto lead = sim::find_lead(world, sim_cfg_)) {
        const double headway =
            (lead->x - world.ego.x) / std::max(world.ego.v, 1.0);
        if (headway < p_.pass_headway_time) t.l_hat = 1.0;
      }
    } else {
      const sim::VehicleState* rear = nearest_behind(world, 0);
      if (!rear || world.ego.x - rear->x > p_.merge_back_gap) t.l_hat = 1.0;
    }
  }
  return t;
}

}  // namespace maveric::personas
