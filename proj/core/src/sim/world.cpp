#include "maveric/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maveric/errors.hpp"

namespace maveric::sim {

std::vector<double> spawn_lead_schedule(double ego_target_speed,
                                        double posted_speed,
                                        std::uint64_t seed) {
  if (ego_target_speed <= 0.0 || posted_speed <= 0.0)
    throw std::invalid_argument("spawn_lead_schedule: speeds must be positive");
  std::vector<double> speeds = {0.85 * ego_target_speed,
                                0.90 * ego_target_speed,
                                0.97 * ego_target_speed,
                                0.90 * posted_speed,
                                posted_speed,
                                1.10 * posted_speed};
  Rng rng(seed);
  rng.shuffle(speeds);
  return speeds;
}

namespace {

int lane_of(double y, const SimConfig& cfg) {
  return y > 0.5 * cfg.lane_width ? 1 : 0;
}

}  // namespace

WorldState step_world(const WorldState& world, double ego_accel,
                      double ego_steer, double dt, const SimConfig& cfg) {
  if (!(dt > 0.0 && dt <= 0.5))
    throw std::invalid_argument("step_world: dt out of (0, 0.5]");
  if (std::isnan(ego_accel) || std::isnan(ego_steer))
    throw std::invalid_argument("step_world: NaN command");

  const double a = std::clamp(ego_accel, cfg.accel_min, cfg.accel_max);
  const double s = std::clamp(ego_steer, -cfg.steer_max, cfg.steer_max);

  WorldState next = world;
  next.time = world.time + dt;

  VehicleState& ego = next.ego;
  ego.x += ego.v * std::cos(ego.heading) * dt;
  ego.y += ego.v * std::sin(ego.heading) * dt;
  ego.heading += ego.v / cfg.wheelbase * std::tan(s) * dt;
  ego.v = std::clamp(ego.v + a * dt, 0.0, cfg.v_max);
  ego.lane = lane_of(ego.y, cfg);

  for (VehicleState& t : next.traffic) t.x += t.v * dt;
  std::sort(next.traffic.begin(), next.traffic.end(),
            [](const VehicleState& l, const VehicleState& r) { return l.x < r.x; });
  return next;
}

std::optional<VehicleState> find_lead(const WorldState& world,
                                      const SimConfig& cfg) {
  const VehicleState* best = nullptr;
  for (const VehicleState& t : world.traffic) {
    if (t.lane != world.ego.lane || t.x <= world.ego.x) continue;
    if (t.x - world.ego.x > cfg.d_max) continue;
    if (!best || t.x < best->x) best = &t;
  }
  if (!best) return std::nullopt;
  return *best;
}

std::optional<VehicleState> find_rear(const WorldState& world) {
  const VehicleState* best = nullptr;
  for (const VehicleState& t : world.traffic) {
    if (t.lane != world.ego.lane || t.x >= world.ego.x) continue;
    if (!best || t.x > best->x) best = &t;
  }
  if (!best) return std::nullopt;
  return *best;
}

FeatureWindow observe(const std::vector<WorldState>& history, int W,
                      const SimConfig& cfg) {
  if (static_cast<int>(history.size()) < W)
    throw InsufficientHistory("observe: history shorter than window");
  FeatureWindow fw;
  fw.v_ev.reserve(W);
  fw.v_lv.reserve(W);
  fw.d_x.reserve(W);
  fw.d_y.reserve(W);
  for (std::size_t i = history.size() - W; i < history.size(); ++i) {
    const WorldState& w = history[i];
    fw.v_ev.push_back(w.ego.v);
    if (auto lead = find_lead(w, cfg)) {
      fw.d_x.push_back(std::min(lead->x - w.ego.x, cfg.d_max));
      fw.v_lv.push_back(lead->v);
      fw.d_y.push_back(lead->y - w.ego.y);
    } else {
      fw.d_x.push_back(cfg.d_max);
      fw.v_lv.push_back(w.posted_speed);
      // Without a lead the lateral channel falls back to the offset from the
      // right-lane centerline, so road position stays observable.
      fw.d_y.push_back(-w.ego.y);
    }
  }
  return fw;
}

bool any_collision(const WorldState& world, const SimConfig& cfg) {
  const auto overlap = [&](const VehicleState& a, const VehicleState& b) {
    return std::abs(a.x - b.x) < cfg.vehicle_length &&
           std::abs(a.y - b.y) < cfg.vehicle_width;
  };
  for (std::size_t i = 0; i < world.traffic.size(); ++i) {
    if (overlap(world.ego, world.traffic[i])) return true;
    for (std::size_t j = i + 1; j < world.traffic.size(); ++j)
      if (overlap(world.traffic[i], world.traffic[j])) return true;
  }
  return false;
}

Simulation::Simulation(const SimConfig& cfg, double ego_target_speed,
                       std::uint64_t seed)
    : cfg_(cfg),
      ego_target_speed_(ego_target_speed),
      rng_(Rng::derive(seed, 0)),
      schedule_(spawn_lead_schedule(ego_target_speed, cfg.posted_speed,
                                    Rng::derive(seed, 1))) {
  world_.posted_speed = cfg_.posted_speed;
  world_.ego.x = 0.0;
  world_.ego.y = 0.0;
  world_.ego.v = ego_target_speed;
  world_.ego.lane = 0;

  spawn_lead(cfg_.lead_spawn_ahead);
  offlane_frontier_ = world_.ego.x - 300.0;
  extend_offlane_traffic();
}

double Simulation::next_lead_speed() {
  if (schedule_pos_ == schedule_.size()) {
    rng_.shuffle(schedule_);
    schedule_pos_ = 0;
  }
  return schedule_[schedule_pos_++];
}

void Simulation::spawn_lead(double ahead_of_ego) {
  double x = world_.ego.x + ahead_of_ego;
  // Keep 30 m clear of anything already in the lane.
  bool moved = true;
  while (moved) {
    moved = false;
    for (const VehicleState& t : world_.traffic) {
      if (t.lane == 0 && std::abs(t.x - x) < 30.0) {
        x = t.x + 30.0;
        moved = true;
      }
    }
  }
  VehicleState lead;
  lead.x = x;
  lead.y = 0.0;
  lead.v = next_lead_speed();
  lead.cruise_v = lead.v;
  lead.lane = 0;
  lead.id = next_id_++;
  current_lead_id_ = lead.id;
  world_.traffic.push_back(lead);
  std::sort(world_.traffic.begin(), world_.traffic.end(),
            [](const VehicleState& l, const VehicleState& r) { return l.x < r.x; });
}

void Simulation::extend_offlane_traffic() {
  const double horizon = world_.ego.x + 900.0;
  while (offlane_frontier_ < horizon) {
    double x = offlane_frontier_;
    for (const VehicleState& t : world_.traffic)
      if (t.lane == 1 && t.x > x - 40.0 && t.x < x + 40.0) x = t.x + 40.0;
    // Skip spawns that would drop a vehicle onto the ego.
    if (std::abs(x - world_.ego.x) > 60.0 || world_.ego.lane == 0) {
      VehicleState v;
      v.x = x;
      v.y = cfg_.lane_width;
      v.v = cfg_.posted_speed;
      v.cruise_v = v.v;
      v.lane = 1;
      v.id = next_id_++;
      world_.traffic.push_back(v);
    }
    offlane_frontier_ = x + std::max(rng_.exponential(cfg_.offlane_mean_gap), 40.0);
  }
  std::sort(world_.traffic.begin(), world_.traffic.end(),
            [](const VehicleState& l, const VehicleState& r) { return l.x < r.x; });
}

void Simulation::clamp_traffic_speeds() {
  // Traffic never rear-ends: inside 15 m of a slower same-lane vehicle ahead
  // (ego included) a vehicle matches its speed; it resumes cruise_v once clear.
  for (VehicleState& t : world_.traffic) {
    t.v = t.cruise_v;
    const VehicleState* ahead = nullptr;
    if (world_.ego.lane == t.lane && world_.ego.x > t.x) ahead = &world_.ego;
    for (const VehicleState& o : world_.traffic) {
      if (&o == &t || o.lane != t.lane || o.x <= t.x) continue;
      if (!ahead || o.x < ahead->x) ahead = &o;
    }
    if (ahead && ahead->x - t.x < 15.0 && t.v > ahead->v) t.v = ahead->v;
  }
}

void Simulation::manage_lead() {
  const VehicleState* lead = nullptr;
  for (const VehicleState& t : world_.traffic)
    if (t.id == current_lead_id_) lead = &t;
  const bool passed = lead && lead->x < world_.ego.x;
  const bool receded = lead && lead->x - world_.ego.x > cfg_.lead_recycle_gap;
  if (!lead || passed || receded) spawn_lead(cfg_.lead_spawn_ahead);
}

void Simulation::prune() {
  std::erase_if(world_.traffic, [&](const VehicleState& t) {
    return t.x < world_.ego.x - 300.0 || t.x > world_.ego.x + 900.0;
  });
}

void Simulation::step(double ego_accel, double ego_steer) {
  clamp_traffic_speeds();
  world_ = step_world(world_, ego_accel, ego_steer, cfg_.dt, cfg_);
  manage_lead();
  extend_offlane_traffic();
  prune();
}

}  // namespace maveric::sim
