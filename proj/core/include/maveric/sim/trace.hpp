#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maveric/sim/types.hpp"

namespace maveric::sim {

struct NeighborSnapshot {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
};

/// One step of a rollout. d_x/d_y use the same sentinel conventions as
/// observe(), so feature windows can be rebuilt from a stored trace.
struct TraceRecord {
  double t = 0.0;
  double ego_x = 0.0;
  double ego_y = 0.0;
  double ego_v = 0.0;
  int ego_lane = 0;
  std::optional<NeighborSnapshot> lead;
  std::optional<NeighborSnapshot> rear;
  double d_x = 0.0;
  double d_y = 0.0;
  bool lane_change_flag = false;
};

struct ScenarioSpec {
  double posted_speed_mps = 0.0;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  std::string persona_id;
  // Anchor speed of the lead-vehicle schedule, so condition rollouts can
  // reproduce a demonstration's traffic exactly. 0 means posted speed.
  double schedule_speed_mps = 0.0;
};

struct TraceMeta {
  std::string persona_id;
  double adb_score = 0.0;
  std::uint64_t seed = 0;
  ScenarioSpec scenario;
  std::string condition;       // mimic | aggressive | cautious | perp | demo
  std::optional<double> angle_deg;
  std::string config_hash;
};

struct Trace {
  TraceMeta meta;
  std::vector<TraceRecord> records;
};

/// Writes records to `jsonl_path` (one JSON object per line) and the metadata
/// sidecar next to it with extension ".meta.json".
void write_trace(const std::string& jsonl_path, const Trace& trace);

/// Reads records + sidecar back. Missing sidecar or malformed line throws
/// ParseError.
Trace read_trace(const std::string& jsonl_path);

std::string sidecar_path(const std::string& jsonl_path);

}  // namespace maveric::sim
