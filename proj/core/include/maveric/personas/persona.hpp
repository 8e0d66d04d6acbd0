#pragma once

#include <cstdint>
#include <optional>

#include "maveric/config.hpp"
#include "maveric/control_targets.hpp"
#include "maveric/rng.hpp"
#include "maveric/sim/types.hpp"

namespace maveric::personas {

struct PersonaParams {
  double adb_score = 0.0;        // [11, 55]
  double target_speed = 0.0;     // m/s
  double desired_follow = 0.0;   // m
  double pass_headway_time = 0.0;  // s, initiates a pass below this headway
  double merge_back_gap = 0.0;   // m, returns right above this rear gap
  double speed_jitter = 0.0;     // m/s, OU noise scale
};

/// The monotone ADB -> behavior map before any jitter.
PersonaParams persona_base(double adb_score, const PersonaConfig& cfg);

/// persona_base plus seeded jitter of up to ±10% of each parameter's span,
/// so equal scores still yield distinct drivers. Throws on adb outside
/// [11, 55].
PersonaParams make_persona(double adb_score, std::uint64_t seed,
                           const PersonaConfig& cfg);

/// Rule-based demonstrator: regulates target speed (plus a pass boost while
/// committed to the left lane), requests a pass when the headway time drops
/// below pass_headway_time, and requests a merge back once the right-lane
/// rear gap exceeds merge_back_gap. Emits the same ControlTargets the
/// learned networks do, so both run through one controller stack.
class PersonaPolicy {
 public:
  PersonaPolicy(const PersonaParams& params, const PersonaConfig& cfg,
                const SimConfig& sim_cfg, std::uint64_t seed)
      : p_(params), cfg_(cfg), sim_cfg_(sim_cfg), rng_(Rng::derive(seed, 7)) {}

  ControlTargets targets(const sim::WorldState& world, bool lane_change_active,
                         std::optional<int> lane_change_target);

  const PersonaParams& params() const { return p_; }

 private:
  PersonaParams p_;
  PersonaConfig cfg_;
  SimConfig sim_cfg_;
  Rng rng_;
  double ou_ = 0.0;
};

}  // namespace maveric::personas
