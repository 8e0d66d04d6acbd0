#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "maveric/config.hpp"
#include "maveric/control_targets.hpp"
#include "maveric/sim/trace.hpp"
#include "maveric/sim/types.hpp"

namespace maveric {

/// Supplies control targets each step. The two extra arguments expose the
/// lane-change latch so rule-based policies can commit to a maneuver.
using TargetsFn = std::function<ControlTargets(
    const sim::WorldState&, const sim::FeatureWindow&, bool lane_change_active,
    std::optional<int> lane_change_target)>;

struct RolloutResult {
  sim::Trace trace;
  bool collision = false;
  bool off_road = false;
  double min_lead_gap = 0.0;  // min d_x while a lead existed; d_max if never
};

/// Runs duration_s / dt steps: observe -> targets -> controller stack -> sim.
/// schedule_speed seeds the lead-speed schedule (the demonstrator's target
/// speed, also for mimicry rollouts of that persona's scenario).
RolloutResult run_rollout(const Config& cfg, const TargetsFn& targets_fn,
                          double schedule_speed, double duration_s,
                          std::uint64_t seed, const sim::TraceMeta& meta);

}  // namespace maveric
