#pragma once

#include <optional>

#include "maveric/config.hpp"
#include "maveric/control_targets.hpp"
#include "maveric/controllers/lane_change.hpp"
#include "maveric/controllers/pi.hpp"
#include "maveric/sim/types.hpp"

namespace maveric::controllers {

enum class Mode { VELOCITY, FOLLOW, LANE_CHANGE };

/// Gap check in the target lane. f_ref scales the required clearance so a
/// long-follow style keeps long merge gaps; closing speed adds 8 s worth of
/// margin per m/s.
bool lane_change_legal(const sim::WorldState& world, int target_lane,
                       double f_ref, const ControllerConfig& gains);

/// Pure mode selection: LANE_CHANGE iff l_hat > delta and the adjacent-lane
/// gap check passes (or a change is already latched); else FOLLOW iff the
/// lead is within lambda; else VELOCITY.
Mode arbitrate(const sim::WorldState& world, const ControlTargets& targets,
               const ControllerConfig& gains, const SimConfig& limits,
               bool latched);

struct Command {
  double accel = 0.0;
  double steer = 0.0;
  Mode mode = Mode::VELOCITY;
  bool lane_change_started = false;
};

/// Per-rollout controller state: the two PI integrators and the active
/// lane-change latch. step() turns targets into one actuator command.
class ControllerStack {
 public:
  ControllerStack(const ControllerConfig& gains, const SimConfig& limits)
      : gains_(gains), limits_(limits) {}

  Command step(const sim::WorldState& world, const ControlTargets& targets);

  bool lane_change_active() const { return path_.has_value(); }

 private:
  double lane_keep_steer(const sim::VehicleState& ego) const;

  ControllerConfig gains_;
  SimConfig limits_;
  PiState vel_state_;
  PiState follow_state_;
  std::optional<LaneChangePath> path_;
};

}  // namespace maveric::controllers
