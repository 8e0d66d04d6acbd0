#include "maveric/sim/trace.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "maveric/errors.hpp"

namespace maveric::sim {
namespace {

using nlohmann::json;

json neighbor_json(const std::optional<NeighborSnapshot>& n) {
  if (!n) return nullptr;
  return json{{"x", n->x}, {"y", n->y}, {"v", n->v}};
}

std::optional<NeighborSnapshot> neighbor_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  NeighborSnapshot n;
  n.x = j.at("x").get<double>();
  n.y = j.at("y").get<double>();
  n.v = j.at("v").get<double>();
  return n;
}

json record_json(const TraceRecord& r) {
  return json{{"t", r.t},
              {"ego", json{{"x", r.ego_x}, {"y", r.ego_y}, {"v", r.ego_v}, {"lane", r.ego_lane}}},
              {"lead", neighbor_json(r.lead)},
              {"rear", neighbor_json(r.rear)},
              {"d_x", r.d_x},
              {"d_y", r.d_y},
              {"lane_change_flag", r.lane_change_flag}};
}

TraceRecord record_from(const json& j) {
  TraceRecord r;
  r.t = j.at("t").get<double>();
  const json& ego = j.at("ego");
  r.ego_x = ego.at("x").get<double>();
  r.ego_y = ego.at("y").get<double>();
  r.ego_v = ego.at("v").get<double>();
  r.ego_lane = ego.at("lane").get<int>();
  r.lead = neighbor_from(j.at("lead"));
  r.rear = neighbor_from(j.at("rear"));
  r.d_x = j.at("d_x").get<double>();
  r.d_y = j.at("d_y").get<double>();
  r.lane_change_flag = j.at("lane_change_flag").get<bool>();
  return r;
}

json meta_json(const TraceMeta& m) {
  json j{{"persona_id", m.persona_id},
         {"adb_score", m.adb_score},
         {"seed", m.seed},
         {"scenario",
          json{{"posted_speed_mps", m.scenario.posted_speed_mps},
               {"duration_s", m.scenario.duration_s},
               {"seed", m.scenario.seed},
               {"persona_id", m.scenario.persona_id},
               {"schedule_speed_mps", m.scenario.schedule_speed_mps}}},
         {"condition", m.condition},
         {"config_hash", m.config_hash}};
  j["angle_deg"] = m.angle_deg ? json(*m.angle_deg) : json(nullptr);
  return j;
}

TraceMeta meta_from(const json& j) {
  TraceMeta m;
  m.persona_id = j.at("persona_id").get<std::string>();
  m.adb_score = j.at("adb_score").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const json& sc = j.at("scenario");
  m.scenario.posted_speed_mps = sc.at("posted_speed_mps").get<double>();
  m.scenario.duration_s = sc.at("duration_s").get<double>();
  m.scenario.seed = sc.at("seed").get<std::uint64_t>();
  m.scenario.persona_id = sc.at("persona_id").get<std::string>();
  m.scenario.schedule_speed_mps = sc.value("schedule_speed_mps", 0.0);
  m.condition = j.at("condition").get<std::string>();
  if (j.contains("angle_deg") && !j.at("angle_deg").is_null())
    m.angle_deg = j.at("angle_deg").get<double>();
  m.config_hash = j.value("config_hash", "");
  return m;
}

}  // namespace

std::string sidecar_path(const std::string& jsonl_path) {
  const auto dot = jsonl_path.rfind(".jsonl");
  const std::string stem =
      dot == std::string::npos ? jsonl_path : jsonl_path.substr(0, dot);
  return stem + ".meta.json";
}

void write_trace(const std::string& jsonl_path, const Trace& trace) {
  std::ofstream out(jsonl_path);
  if (!out) throw ParseError("cannot open for write: " + jsonl_path);
  for (const TraceRecord& r : trace.records) out << record_json(r).dump() << '\n';
  out.close();

  std::ofstream meta(sidecar_path(jsonl_path));
  if (!meta) throw ParseError("cannot open for write: " + sidecar_path(jsonl_path));
  meta << meta_json(trace.meta).dump(2) << '\n';
}

Trace read_trace(const std::string& jsonl_path) {
  std::ifstream in(jsonl_path);
  if (!in) throw ParseError("cannot open trace: " + jsonl_path);
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      trace.records.push_back(record_from(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(jsonl_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }

  std::ifstream meta(sidecar_path(jsonl_path));
  if (!meta) throw ParseError("missing sidecar: " + sidecar_path(jsonl_path));
  try {
    trace.meta = meta_from(json::parse(meta));
  } catch (const json::exception& e) {
    throw ParseError(sidecar_path(jsonl_path) + ": " + e.what());
  }
  return trace;
}

}  // namespace maveric::sim
