#include "maveric/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace maveric {
namespace {

using nlohmann::json;

json to_json(const SimConfig& c) {
  return json{{"dt", c.dt},
              {"window_steps", c.window_steps},
              {"posted_speed", c.posted_speed},
              {"lane_width", c.lane_width},
              {"d_max", c.d_max},
              {"accel_min", c.accel_min},
              {"accel_max", c.accel_max},
              {"steer_max", c.steer_max},
              {"v_max", c.v_max},
              {"wheelbase", c.wheelbase},
              {"vehicle_length", c.vehicle_length},
              {"vehicle_width", c.vehicle_width},
              {"lead_spawn_ahead", c.lead_spawn_ahead},
              {"lead_recycle_gap", c.lead_recycle_gap},
              {"offlane_mean_gap", c.offlane_mean_gap}};
}

json to_json(const ControllerConfig& c) {
  return json{{"kp_v", c.kp_v},
              {"ki_v", c.ki_v},
              {"kp_f", c.kp_f},
              {"ki_f", c.ki_f},
              {"kv_f", c.kv_f},
              {"stanley_k", c.stanley_k},
              {"lambda", c.lambda},
              {"delta", c.delta},
              {"f_min", c.f_min},
              {"tau_min", c.tau_min},
              {"lane_change_min_len", c.lane_change_min_len},
              {"lane_change_len_per_speed", c.lane_change_len_per_speed},
              {"front_clear_min", c.front_clear_min},
              {"rear_clear_base", c.rear_clear_base},
              {"rear_clear_closing", c.rear_clear_closing},
              {"rear_clear_fhat", c.rear_clear_fhat}};
}

json to_json(const PersonaConfig& c) {
  return json{{"speed_jitter", c.speed_jitter},
              {"ou_theta", c.ou_theta},
              {"pass_boost_frac", c.pass_boost_frac},
              {"param_jitter", c.param_jitter}};
}

json to_json(const LearnConfig& c) {
  return json{{"hidden_width", c.hidden_width},
              {"hidden_layers", c.hidden_layers},
              {"learning_rate", c.learning_rate},
              {"momentum", c.momentum},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"patience", c.patience},
              {"c2", c.c2},
              {"c4", c.c4},
              {"val_fraction", c.val_fraction},
              {"window_stride", c.window_stride},
              {"speed_scale", c.speed_scale},
              {"gap_scale", c.gap_scale},
              {"fit_learning_rate", c.fit_learning_rate},
              {"fit_epochs", c.fit_epochs},
              {"fit_restarts", c.fit_restarts}};
}

json to_json(const StylespaceConfig& c) {
  return json{{"condition_delta_adb", c.condition_delta_adb},
              {"perp_angles", c.perp_angles}};
}

json to_json(const Config& c) {
  return json{{"sim", to_json(c.sim)},
              {"controllers", to_json(c.controllers)},
              {"personas", to_json(c.personas)},
              {"learn", to_json(c.learn)},
              {"stylespace", to_json(c.stylespace)}};
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void from_json(const json& j, SimConfig& c) {
  get_if_present(j, "dt", c.dt);
  get_if_present(j, "window_steps", c.window_steps);
  get_if_present(j, "posted_speed", c.posted_speed);
  get_if_present(j, "lane_width", c.lane_width);
  get_if_present(j, "d_max", c.d_max);
  get_if_present(j, "accel_min", c.accel_min);
  get_if_present(j, "accel_max", c.accel_max);
  get_if_present(j, "steer_max", c.steer_max);
  get_if_present(j, "v_max", c.v_max);
  get_if_present(j, "wheelbase", c.wheelbase);
  get_if_present(j, "vehicle_length", c.vehicle_length);
  get_if_present(j, "vehicle_width", c.vehicle_width);
  get_if_present(j, "lead_spawn_ahead", c.lead_spawn_ahead);
  get_if_present(j, "lead_recycle_gap", c.lead_recycle_gap);
  get_if_present(j, "offlane_mean_gap", c.offlane_mean_gap);
}

void from_json(const json& j, ControllerConfig& c) {
  get_if_present(j, "kp_v", c.kp_v);
  get_if_present(j, "ki_v", c.ki_v);
  get_if_present(j, "kp_f", c.kp_f);
  get_if_present(j, "ki_f", c.ki_f);
  get_if_present(j, "kv_f", c.kv_f);
  get_if_present(j, "stanley_k", c.stanley_k);
  get_if_present(j, "lambda", c.lambda);
  get_if_present(j, "delta", c.delta);
  get_if_present(j, "f_min", c.f_min);
  get_if_present(j, "tau_min", c.tau_min);
  get_if_present(j, "lane_change_min_len", c.lane_change_min_len);
  get_if_present(j, "lane_change_len_per_speed", c.lane_change_len_per_speed);
  get_if_present(j, "front_clear_min", c.front_clear_min);
  get_if_present(j, "rear_clear_base", c.rear_clear_base);
  get_if_present(j, "rear_clear_closing", c.rear_clear_closing);
  get_if_present(j, "rear_clear_fhat", c.rear_clear_fhat);
}

void from_json(const json& j, PersonaConfig& c) {
  get_if_present(j, "speed_jitter", c.speed_jitter);
  get_if_present(j, "ou_theta", c.ou_theta);
  get_if_present(j, "pass_boost_frac", c.pass_boost_frac);
  get_if_present(j, "param_jitter", c.param_jitter);
}

void from_json(const json& j, LearnConfig& c) {
  get_if_present(j, "hidden_width", c.hidden_width);
  get_if_present(j, "hidden_layers", c.hidden_layers);
  get_if_present(j, "learning_rate", c.learning_rate);
  get_if_present(j, "momentum", c.momentum);
  get_if_present(j, "batch_size", c.batch_size);
  get_if_present(j, "epochs", c.epochs);
  get_if_present(j, "patience", c.patience);
  get_if_present(j, "c2", c.c2);
  get_if_present(j, "c4", c.c4);
  get_if_present(j, "val_fraction", c.val_fraction);
  get_if_present(j, "window_stride", c.window_stride);
  get_if_present(j, "speed_scale", c.speed_scale);
  get_if_present(j, "gap_scale", c.gap_scale);
  get_if_present(j, "fit_learning_rate", c.fit_learning_rate);
  get_if_present(j, "fit_epochs", c.fit_epochs);
  get_if_present(j, "fit_restarts", c.fit_restarts);
}

void from_json(const json& j, StylespaceConfig& c) {
  get_if_present(j, "condition_delta_adb", c.condition_delta_adb);
  get_if_present(j, "perp_angles", c.perp_angles);
}

}  // namespace

std::string Config::canonical_json() const {
  // nlohmann::json object keys are already sorted; dump() prints doubles with
  // shortest round-trip precision, so equal configs hash equally.
  return to_json(*this).dump(2);
}

std::string Config::hash() const {
  const std::string text = canonical_json();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Config Config::from_json_text(const std::string& text) {
  json j = json::parse(text);
  Config c;
  if (auto it = j.find("sim"); it != j.end()) from_json(*it, c.sim);
  if (auto it = j.find("controllers"); it != j.end()) from_json(*it, c.controllers);
  if (auto it = j.find("personas"); it != j.end()) from_json(*it, c.personas);
  if (auto it = j.find("learn"); it != j.end()) from_json(*it, c.learn);
  if (auto it = j.find("stylespace"); it != j.end()) from_json(*it, c.stylespace);
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must be path=value: " + assignment);
  std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json root = to_json(*this);
  std::string ptr = "/";
  for (char ch : path) ptr += (ch == '.') ? '/' : ch;
  const json::json_pointer jp(ptr);
  if (!root.contains(jp))
    throw std::invalid_argument("unknown config path: " + path);

  json& slot = root[jp];
  if (slot.is_number_integer()) {
    slot = std::stoi(value);
  } else if (slot.is_number_float()) {
    slot = std::stod(value);
  } else if (slot.is_boolean()) {
    slot = (value == "true" || value == "1");
  } else if (slot.is_string()) {
    slot = value;
  } else {
    throw std::invalid_argument("cannot override structured path: " + path);
  }
  *this = from_json_text(root.dump());
}

}  // namespace maveric
