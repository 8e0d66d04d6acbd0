#include "maveric/rollout.hpp"

#include <cmath>

#include "maveric/controllers/arbiter.hpp"
#include "maveric/sim/world.hpp"

namespace maveric {

namespace {

std::optional<sim::NeighborSnapshot> snap(
    const std::optional<sim::VehicleState>& v) {
  if (!v) return std::nullopt;
  return sim::NeighborSnapshot{v->x, v->y, v->v};
}

}  // namespace

RolloutResult run_rollout(const Config& cfg, const TargetsFn& targets_fn,
                          double schedule_speed, double duration_s,
                          std::uint64_t seed, const sim::TraceMeta& meta) {
  const SimConfig& sc = cfg.sim;
  sim::Simulation simulation(sc, schedule_speed, seed);
  controllers::ControllerStack stack(cfg.controllers, sc);

  RolloutResult result;
  result.trace.meta = meta;
  result.min_lead_gap = sc.d_max;

  std::vector<sim::WorldState> history;
  const long long n_steps = std::llround(duration_s / sc.dt);
  history.reserve(static_cast<std::size_t>(n_steps) + sc.window_steps);
  for (int i = 0; i < sc.window_steps; ++i) history.push_back(simulation.world());

  int flag_steps = 0;
  std::optional<int> active_target;
  for (long long step = 0; step < n_steps; ++step) {
    const sim::WorldState& world = simulation.world();
    const sim::FeatureWindow window = sim::observe(history, sc.window_steps, sc);

    const ControlTargets targets =
        targets_fn(world, window, stack.lane_change_active(), active_target);
    const controllers::Command cmd = stack.step(world, targets);
    if (cmd.lane_change_started) {
      flag_steps = 6;  // initiation step plus the following 0.5 s
      active_target = 1 - world.ego.lane;
    }
    if (!stack.lane_change_active()) active_target.reset();

    sim::TraceRecord rec;
    rec.t = world.time;
    rec.ego_x = world.ego.x;
    rec.ego_y = world.ego.y;
    rec.ego_v = world.ego.v;
    rec.ego_lane = world.ego.lane;
    const auto lead = sim::find_lead(world, sc);
    const auto rear = sim::find_rear(world);
    rec.lead = snap(lead);
    rec.rear = snap(rear);
    if (lead) {
      rec.d_x = std::min(lead->x - world.ego.x, sc.d_max);
      rec.d_y = lead->y - world.ego.y;
    } else {
      rec.d_x = sc.d_max;
      rec.d_y = -world.ego.y;
    }
    rec.lane_change_flag = flag_steps > 0;
    if (flag_steps > 0) --flag_steps;
    result.trace.records.push_back(rec);

    if (lead) result.min_lead_gap = std::min(result.min_lead_gap, lead->x - world.ego.x);
    if (sim::any_collision(world, sc)) result.collision = true;
    if (world.ego.y < -0.5 * sc.lane_width || world.ego.y > 1.5 * sc.lane_width)
      result.off_road = true;

    simulation.step(cmd.accel, cmd.steer);
    history.push_back(simulation.world());
  }
  return result;
}

}  // namespace maveric
