#include "maveric/controllers/arbiter.hpp"

#include <algorithm>
#include <cmath>

#include "maveric/sim/world.hpp"

namespace maveric::controllers {

bool lane_change_legal(const sim::WorldState& world, int target_lane,
                       double f_ref, const ControllerConfig& gains) {
  const sim::VehicleState* front = nullptr;
  const sim::VehicleState* rear = nullptr;
  for (const sim::VehicleState& t : world.traffic) {
    if (t.lane != target_lane) continue;
    if (t.x >= world.ego.x) {
      if (!front || t.x < front->x) front = &t;
    } else if (!rear || t.x > rear->x) {
      rear = &t;
    }
  }
  if (front) {
    const double gap = front->x - world.ego.x;
    const double need = std::max(
        gains.front_clear_min +
            gains.rear_clear_closing * std::max(0.0, world.ego.v - front->v),
        gains.rear_clear_fhat * f_ref);
    if (gap < need) return false;
  }
  if (rear) {
    const double gap = world.ego.x - rear->x;
    const double need = std::max(
        gains.rear_clear_base +
            gains.rear_clear_closing * std::max(0.0, rear->v - world.ego.v),
        gains.rear_clear_fhat * f_ref);
    if (gap < need) return false;
  }
  return true;
}

Mode arbitrate(const sim::WorldState& world, const ControlTargets& targets,
               const ControllerConfig& gains, const SimConfig& limits,
               bool latched) {
  if (latched) return Mode::LANE_CHANGE;
  if (targets.l_hat > gains.delta) {
    const int target_lane = 1 - world.ego.lane;
    if (lane_change_legal(world, target_lane, targets.f_hat, gains))
      return Mode::LANE_CHANGE;
  }
  const auto lead = sim::find_lead(world, limits);
  if (lead && lead->x - world.ego.x < gains.lambda) return Mode::FOLLOW;
  return Mode::VELOCITY;
}

double ControllerStack::lane_keep_steer(const sim::VehicleState& ego) const {
  const double y_center = ego.lane * limits_.lane_width;
  const double steer =
      (0.0 - ego.heading) +
      std::atan(gains_.stanley_k * (y_center - ego.y) / std::max(ego.v, 1.0));
  return std::clamp(steer, -limits_.steer_max, limits_.steer_max);
}

Command ControllerStack::step(const sim::WorldState& world,
                              const ControlTargets& targets) {
  Command cmd;
  const auto lead = sim::find_lead(world, limits_);

  if (path_) {
    const auto steer = track_path(world.ego, *path_, gains_.stanley_k, limits_);
    const bool settled =
        std::abs(world.ego.y - path_->target_lane * limits_.lane_width) <= 0.1;
    if (!steer && settled) {
      path_.reset();
    } else {
      cmd.mode = Mode::LANE_CHANGE;
      // Past the path end but not yet settled: keep converging on the target
      // lane centerline before releasing the latch.
      cmd.steer = steer ? *steer : lane_keep_steer(world.ego);
      auto [accel, vs] = pi_velocity(world.ego, targets.v_hat, gains_, limits_,
                                     vel_state_, limits_.dt);
      vel_state_ = vs;
      cmd.accel = accel;
      if (lead &&
          lead->x - world.ego.x <
              std::max(gains_.f_min, gains_.tau_min * world.ego.v))
        cmd.accel = limits_.accel_min;
      return cmd;
    }
  }

  Mode mode = arbitrate(world, targets, gains_, limits_, false);
  if (mode == Mode::LANE_CHANGE) {
    const int target_lane = 1 - world.ego.lane;
    path_ = plan_lane_change(world.ego, lead, target_lane, world.ego.v, gains_,
                             limits_);
    if (path_) {
      cmd.lane_change_started = true;
    } else {
      mode = (lead && lead->x - world.ego.x < gains_.lambda) ? Mode::FOLLOW
                                                             : Mode::VELOCITY;
    }
  }

  cmd.mode = mode;
  switch (mode) {
    case Mode::LANE_CHANGE: {
      cmd.steer = *track_path(world.ego, *path_, gains_.stanley_k, limits_);
      auto [accel, vs] = pi_velocity(world.ego, targets.v_hat, gains_, limits_,
                                     vel_state_, limits_.dt);
      vel_state_ = vs;
      cmd.accel = accel;
      break;
    }
    case Mode::FOLLOW: {
      auto [accel, fs] = pi_follow(world.ego, lead, targets.f_hat, gains_,
                                   limits_, follow_state_, limits_.dt);
      follow_state_ = fs;
      cmd.accel = accel;
      cmd.steer = lane_keep_steer(world.ego);
      break;
    }
    case Mode::VELOCITY: {
      auto [accel, vs] = pi_velocity(world.ego, targets.v_hat, gains_, limits_,
                                     vel_state_, limits_.dt);
      vel_state_ = vs;
      cmd.accel = accel;
      cmd.steer = lane_keep_steer(world.ego);
      break;
    }
  }
  return cmd;
}

}  // namespace maveric::controllers
