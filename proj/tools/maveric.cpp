// maveric: pipeline entry point.
//   gen-data -> train -> fit-user -> rollout (4 conditions) -> eval -> report
// Exit codes: 0 success, 2 usage, 3 validation or IO, 4 training diverged.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maveric/config.hpp"
#include "maveric/errors.hpp"
#include "maveric/learn/checkpoint.hpp"
#include "maveric/learn/network.hpp"
#include "maveric/learn/trainer.hpp"
#include "maveric/metrics/metrics.hpp"
#include "maveric/metrics/stats.hpp"
#include "maveric/personas/persona.hpp"
#include "maveric/rng.hpp"
#include "maveric/rollout.hpp"
#include "maveric/sim/trace.hpp"
#include "maveric/stylespace/traversal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };
LogLevel g_log_level = LogLevel::kInfo;

void log_error(const std::string& msg) { std::cerr << "[error] " << msg << "\n"; }
void log_info(const std::string& msg) {
  if (g_log_level >= LogLevel::kInfo) std::cerr << "[info] " << msg << "\n";
}
void log_debug(const std::string& msg) {
  if (g_log_level >= LogLevel::kDebug) std::cerr << "[debug] " << msg << "\n";
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void init_log_level() {
  const char* env = std::getenv("MAVERIC_LOG");
  if (!env) return;
  const std::string v(env);
  if (v == "error") g_log_level = LogLevel::kError;
  else if (v == "info") g_log_level = LogLevel::kInfo;
  else if (v == "debug") g_log_level = LogLevel::kDebug;
  else throw UsageError("MAVERIC_LOG must be one of error, info, debug (got '" + v + "')");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

maveric::Config load_config(const std::string& path,
                            const std::vector<std::string>& sets) {
  maveric::Config cfg =
      path.empty() ? maveric::Config{} : maveric::Config::load(path);
  for (const std::string& s : sets) cfg.apply_override(s);
  return cfg;
}

std::vector<fs::path> list_traces(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Embedding files are the interchange format between fit-user, shift, perp,
// rollout, and report.
struct EmbeddingFile {
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  double adb_predicted = 0.0;
  std::optional<double> adb_true;
  std::optional<Eigen::Vector3d> mu;
  std::optional<Eigen::Vector3d> sigma;
  std::string persona_id;
  std::string op = "fit";  // fit | shift | perp
  std::optional<maveric::sim::ScenarioSpec> scenario;
  std::string config_hash;
};

json vec3_json(const Eigen::Vector3d& v) { return json{v(0), v(1), v(2)}; }

Eigen::Vector3d vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw maveric::ParseError("embedding vector must have three entries");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json scenario_json(const maveric::sim::ScenarioSpec& s) {
  return json{{"posted_speed_mps", s.posted_speed_mps},
              {"duration_s", s.duration_s},
              {"seed", s.seed},
              {"persona_id", s.persona_id},
              {"schedule_speed_mps", s.schedule_speed_mps}};
}

maveric::sim::ScenarioSpec scenario_from(const json& j) {
  maveric::sim::ScenarioSpec s;
  s.posted_speed_mps = j.at("posted_speed_mps").get<double>();
  s.duration_s = j.at("duration_s").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.persona_id = j.at("persona_id").get<std::string>();
  s.schedule_speed_mps = j.value("schedule_speed_mps", 0.0);
  return s;
}

json embedding_json(const EmbeddingFile& e) {
  json j;
  j["w"] = vec3_json(e.w);
  j["adb_predicted"] = e.adb_predicted;
  j["adb_true"] = e.adb_true ? json(*e.adb_true) : json(nullptr);
  j["mu"] = e.mu ? vec3_json(*e.mu) : json(nullptr);
  j["sigma"] = e.sigma ? vec3_json(*e.sigma) : json(nullptr);
  j["persona_id"] = e.persona_id;
  j["op"] = e.op;
  j["scenario"] = e.scenario ? scenario_json(*e.scenario) : json(nullptr);
  j["config_hash"] = e.config_hash;
  return j;
}

void write_embedding(const std::string& path, const json& j) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << j.dump(2) << "\n";
}

EmbeddingFile read_embedding(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw maveric::ParseError(path + ": " + e.what());
  }
  EmbeddingFile e;
  e.w = vec3_from(j.at("w"));
  e.adb_predicted = j.value("adb_predicted", 0.0);
  if (j.contains("adb_true") && !j.at("adb_true").is_null())
    e.adb_true = j.at("adb_true").get<double>();
  if (j.contains("mu") && !j.at("mu").is_null()) e.mu = vec3_from(j.at("mu"));
  if (j.contains("sigma") && !j.at("sigma").is_null())
    e.sigma = vec3_from(j.at("sigma"));
  e.persona_id = j.value("persona_id", "");
  e.op = j.value("op", "fit");
  if (j.contains("scenario") && !j.at("scenario").is_null())
    e.scenario = scenario_from(j.at("scenario"));
  e.config_hash = j.value("config_hash", "");
  return e;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOpts {
  std::string config, out;
  std::vector<std::string> sets;
  std::vector<double> adb_list;
  int personas = 6;
  double duration_s = 600.0;
  std::uint64_t seed = 1;
};

void run_gen_data(const GenDataOpts& o) {
  const maveric::Config cfg = load_config(o.config, o.sets);
  fs::create_directories(o.out);

  std::vector<double> adbs = o.adb_list;
  if (adbs.empty()) {
    if (o.personas < 1) throw UsageError("--personas must be at least 1");
    for (int i = 0; i < o.personas; ++i)
      adbs.push_back(o.personas == 1
                         ? 33.0
                         : 11.0 + 44.0 * i / (o.personas - 1));
  }

  const std::string hash = cfg.hash();
  for (std::size_t i = 0; i < adbs.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%02zu", i);
    const std::string pid(buf);

    const maveric::personas::PersonaParams params = maveric::personas::make_persona(
        adbs[i], maveric::Rng::derive(o.seed, 1000 + i), cfg.personas);
    auto policy = std::make_shared<maveric::personas::PersonaPolicy>(
        params, cfg.personas, cfg.sim, maveric::Rng::derive(o.seed, 2000 + i));
    const maveric::TargetsFn fn =
        [policy](const maveric::sim::WorldState& w,
                 const maveric::sim::FeatureWindow&, bool active,
                 std::optional<int> target) {
          return policy->targets(w, active, target);
        };

    maveric::sim::TraceMeta meta;
    meta.persona_id = pid;
    meta.adb_score = params.adb_score;
    meta.seed = maveric::Rng::derive(o.seed, 3000 + i);
    meta.scenario = {cfg.sim.posted_speed, o.duration_s, meta.seed, pid,
                     params.target_speed};
    meta.condition = "demo";
    meta.config_hash = hash;

    const maveric::RolloutResult res = maveric::run_rollout(
        cfg, fn, params.target_speed, o.duration_s, meta.seed, meta);
    if (res.collision || res.off_road)
      log_error(pid + ": demonstration had collision/off-road, trace kept");

    const fs::path out_path = fs::path(o.out) / (pid + ".jsonl");
    maveric::sim::write_trace(out_path.string(), res.trace);
    log_info(pid + ": adb=" + fmt(params.adb_score) + " target_speed=" +
             fmt(params.target_speed) + " -> " + out_path.string());
  }
  log_info("wrote " + std::to_string(adbs.size()) + " demonstrations to " + o.out);
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string config, data, out, train_log;
  std::vector<std::string> sets;
  std::uint64_t seed = 1;
};

void run_train(const TrainOpts& o) {
  const maveric::Config cfg = load_config(o.config, o.sets);
  std::vector<maveric::sim::Trace> traces;
  for (const fs::path& f : list_traces(o.data)) {
    log_debug("reading " + f.string());
    traces.push_back(maveric::sim::read_trace(f.string()));
  }
  log_info("training on " + std::to_string(traces.size()) + " traces");

  const maveric::learn::TrainResult res = maveric::learn::train(traces, cfg, o.seed);
  maveric::learn::save_checkpoint(o.out, res.params);
  if (!o.train_log.empty()) maveric::learn::write_training_log(o.train_log, res.log);
  // best_epoch is 1-based, matching the log's epoch column.
  const double best_val =
      res.best_epoch >= 1 && res.best_epoch <= static_cast<int>(res.log.size())
          ? res.log[res.best_epoch - 1].val_loss
          : 0.0;
  log_info("checkpoint " + o.out + " (best epoch " +
           std::to_string(res.best_epoch) + " of " +
           std::to_string(res.log.size()) + ", val_loss=" + fmt(best_val) + ")");
}

// ---------------------------------------------------------------------------
// fit-user

struct FitUserOpts {
  std::string config, ckpt, trace, out;
  std::vector<std::string> sets;
  std::uint64_t seed = 1;
};

void run_fit_user(const FitUserOpts& o) {
  const maveric::learn::ModelParams params = maveric::learn::load_checkpoint(o.ckpt);
  maveric::Config cfg = o.config.empty() ? params.config : maveric::Config::load(o.config);
  for (const std::string& s : o.sets) cfg.apply_override(s);

  const maveric::sim::Trace trace = maveric::sim::read_trace(o.trace);
  const maveric::learn::StyleEmbedding emb =
      maveric::learn::fit_new_user(params, trace, cfg, o.seed);

  EmbeddingFile ef;
  ef.w = emb.w;
  ef.adb_predicted = emb.adb_score;
  ef.adb_true = trace.meta.adb_score;
  ef.mu = emb.mu;
  ef.sigma = emb.sigma;
  ef.persona_id = trace.meta.persona_id;
  ef.op = "fit";
  ef.scenario = trace.meta.scenario;
  ef.config_hash = cfg.hash();
  write_embedding(o.out, embedding_json(ef));
  log_info("fit " + ef.persona_id + ": adb_true=" + fmt_opt(ef.adb_true) +
           " adb_predicted=" + fmt(ef.adb_predicted));
}

// ---------------------------------------------------------------------------
// rollout

struct RolloutOpts {
  std::string config, ckpt, embedding, out, condition = "mimic";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double duration_s = 300.0;
  bool duration_set = false;
  double angle_deg = 0.0;
  bool angle_set = false;
  double schedule_speed = 0.0;
  bool schedule_set = false;
};

void run_rollout_cmd(const RolloutOpts& o) {
  const maveric::learn::ModelParams params = maveric::learn::load_checkpoint(o.ckpt);
  maveric::Config cfg = o.config.empty() ? params.config : maveric::Config::load(o.config);
  for (const std::string& s : o.sets) cfg.apply_override(s);

  const EmbeddingFile ef = read_embedding(o.embedding);
  Eigen::Vector3d w = ef.w;
  std::optional<double> angle;
  if (o.condition == "aggressive") {
    w = maveric::stylespace::shift_style(params, w, cfg.stylespace.condition_delta_adb).w;
  } else if (o.condition == "cautious") {
    w = maveric::stylespace::shift_style(params, w, -cfg.stylespace.condition_delta_adb).w;
  } else if (o.condition == "perp") {
    if (!o.angle_set) throw UsageError("--angle-deg is required for --condition perp");
    w = maveric::stylespace::perpendicular_sample(params, w, o.angle_deg).w;
    angle = o.angle_deg;
  }

  const double duration =
      o.duration_set ? o.duration_s
      : (ef.scenario && ef.scenario->duration_s > 0) ? ef.scenario->duration_s
                                                     : 300.0;
  const std::uint64_t seed =
      o.seed_set ? o.seed : (ef.scenario ? ef.scenario->seed : 0);
  const double schedule_speed =
      o.schedule_set ? o.schedule_speed
      : (ef.scenario && ef.scenario->schedule_speed_mps > 0)
          ? ef.scenario->schedule_speed_mps
          : cfg.sim.posted_speed;

  const maveric::learn::MavericNet net(params);
  maveric::sim::TraceMeta meta;
  meta.persona_id = ef.persona_id;
  meta.adb_score = net.predict_style(w);
  meta.seed = seed;
  meta.scenario = {cfg.sim.posted_speed, duration, seed, ef.persona_id,
                   schedule_speed};
  meta.condition = o.condition;
  meta.angle_deg = angle;
  meta.config_hash = cfg.hash();

  const maveric::TargetsFn fn = [&net, &w](const maveric::sim::WorldState&,
                                           const maveric::sim::FeatureWindow& win,
                                           bool, std::optional<int>) {
    return net.targets_for(w, win);
  };
  const maveric::RolloutResult res =
      maveric::run_rollout(cfg, fn, schedule_speed, duration, seed, meta);
  maveric::sim::write_trace(o.out, res.trace);

  if (res.collision || res.off_road)
    log_error("SAFETY: collision=" + std::to_string(res.collision) +
              " off_road=" + std::to_string(res.off_road));
  log_info("rollout " + ef.persona_id + " condition=" + o.condition +
           " adb(w)=" + fmt(meta.adb_score) + " min_gap=" + fmt(res.min_lead_gap) +
           " -> " + o.out);
}

// ---------------------------------------------------------------------------
// shift / perp

struct TraverseOpts {
  std::string config, ckpt, embedding, persona_id, out;
  std::vector<std::string> sets;
  double delta_adb = 0.0;
  double angle_deg = 0.0;
};

EmbeddingFile source_embedding(const maveric::learn::ModelParams& params,
                               const TraverseOpts& o) {
  if (!o.embedding.empty()) return read_embedding(o.embedding);
  if (o.persona_id.empty())
    throw UsageError("provide --embedding FILE or --persona-id NAME");
  const auto it = std::find(params.persona_ids.begin(), params.persona_ids.end(),
                            o.persona_id);
  if (it == params.persona_ids.end())
    throw std::runtime_error("persona not in checkpoint: " + o.persona_id);
  const auto idx = static_cast<Eigen::Index>(it - params.persona_ids.begin());
  EmbeddingFile ef;
  ef.w = params.embeddings.row(idx);
  ef.persona_id = o.persona_id;
  ef.adb_true = params.persona_adb[static_cast<std::size_t>(idx)];
  ef.adb_predicted = maveric::learn::MavericNet(params).predict_style(ef.w);
  return ef;
}

void run_shift(const TraverseOpts& o) {
  const maveric::learn::ModelParams params = maveric::learn::load_checkpoint(o.ckpt);
  maveric::Config cfg = o.config.empty() ? params.config : maveric::Config::load(o.config);
  for (const std::string& s : o.sets) cfg.apply_override(s);

  EmbeddingFile ef = source_embedding(params, o);
  const maveric::stylespace::ShiftResult res =
      maveric::stylespace::shift_style(params, ef.w, o.delta_adb);
  ef.w = res.w;
  ef.adb_predicted = res.adb_after;
  ef.mu.reset();
  ef.sigma.reset();
  ef.op = "shift";
  ef.config_hash = cfg.hash();

  json j = embedding_json(ef);
  j["adb_before"] = res.adb_before;
  j["delta_adb"] = o.delta_adb;
  write_embedding(o.out, j);
  log_info("shift " + fmt(o.delta_adb) + ": adb " + fmt(res.adb_before) +
           " -> " + fmt(res.adb_after));
}

void run_perp(const TraverseOpts& o) {
  const maveric::learn::ModelParams params = maveric::learn::load_checkpoint(o.ckpt);
  maveric::Config cfg = o.config.empty() ? params.config : maveric::Config::load(o.config);
  for (const std::string& s : o.sets) cfg.apply_override(s);

  EmbeddingFile ef = source_embedding(params, o);
  const double adb_before =
      maveric::learn::MavericNet(params).predict_style(ef.w);
  const maveric::stylespace::PerpSample res =
      maveric::stylespace::perpendicular_sample(params, ef.w, o.angle_deg);
  ef.w = res.w;
  ef.adb_predicted = res.adb;
  ef.mu.reset();
  ef.sigma.reset();
  ef.op = "perp";
  ef.config_hash = cfg.hash();

  json j = embedding_json(ef);
  j["angle_deg"] = o.angle_deg;
  j["ellipse_sigma"] = json{res.sigma1, res.sigma2};
  write_embedding(o.out, j);
  log_info("perp angle=" + fmt(o.angle_deg) + ": adb " + fmt(adb_before) +
           " -> " + fmt(res.adb) + " (preserved to " +
           fmt(std::abs(res.adb - adb_before)) + ")");
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string traces, demos, out;
};

struct EvalRow {
  std::string persona_id, condition;
  std::uint64_t seed = 0;
  std::optional<double> angle_deg;
  double adb_score = 0.0;
  maveric::metrics::MetricSet m;
  std::optional<maveric::metrics::MimicAccuracy> acc;
  std::string config_hash;
};

void run_eval(const EvalOpts& o) {
  std::vector<maveric::sim::Trace> traces;
  for (const fs::path& f : list_traces(o.traces))
    traces.push_back(maveric::sim::read_trace(f.string()));

  std::map<std::string, maveric::metrics::MetricSet> refs;
  if (!o.demos.empty()) {
    for (const fs::path& f : list_traces(o.demos)) {
      const maveric::sim::Trace t = maveric::sim::read_trace(f.string());
      refs.emplace(t.meta.persona_id, maveric::metrics::compute_metrics(t));
    }
  }
  for (const maveric::sim::Trace& t : traces)
    if (t.meta.condition == "demo")
      refs.emplace(t.meta.persona_id, maveric::metrics::compute_metrics(t));

  std::vector<EvalRow> rows;
  for (const maveric::sim::Trace& t : traces) {
    EvalRow row;
    row.persona_id = t.meta.persona_id;
    row.condition = t.meta.condition;
    row.seed = t.meta.seed;
    row.angle_deg = t.meta.angle_deg;
    row.adb_score = t.meta.adb_score;
    row.m = maveric::metrics::compute_metrics(t);
    row.config_hash = t.meta.config_hash;
    if (t.meta.condition != "demo") {
      const auto it = refs.find(t.meta.persona_id);
      if (it != refs.end())
        row.acc = maveric::metrics::mimic_accuracy(row.m, it->second);
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
    const double aa = a.angle_deg.value_or(-1.0), ba = b.angle_deg.value_or(-1.0);
    return std::tie(a.persona_id, a.condition, aa, a.seed) <
           std::tie(b.persona_id, b.condition, ba, b.seed);
  });

  std::ofstream out(o.out);
  if (!out) throw std::runtime_error("cannot open for write: " + o.out);
  out << "persona_id,condition,seed,angle_deg,adb_score,mean_velocity,"
         "mean_headway_time,distance_headway_merge_back,time_headway_merge_back,"
         "lane_change_count,min_headway_distance,left_lane_fraction,"
         "acc_mean_velocity,acc_mean_headway_time,acc_distance_headway_merge_back,"
         "acc_time_headway_merge_back,acc_lane_change_count,"
         "acc_min_headway_distance,acc_left_lane_fraction,config_hash\n";
  for (const EvalRow& r : rows) {
    out << r.persona_id << ',' << r.condition << ',' << r.seed << ','
        << fmt_opt(r.angle_deg) << ',' << fmt(r.adb_score) << ','
        << fmt(r.m.mean_velocity) << ',' << fmt_opt(r.m.mean_headway_time) << ','
        << fmt_opt(r.m.distance_headway_merge_back) << ','
        << fmt_opt(r.m.time_headway_merge_back) << ',' << r.m.lane_change_count
        << ',' << fmt_opt(r.m.min_headway_distance) << ','
        << fmt(r.m.left_lane_fraction) << ',';
    if (r.acc) {
      out << fmt_opt(r.acc->mean_velocity) << ','
          << fmt_opt(r.acc->mean_headway_time) << ','
          << fmt_opt(r.acc->distance_headway_merge_back) << ','
          << fmt_opt(r.acc->time_headway_merge_back) << ','
          << fmt_opt(r.acc->lane_change_count) << ','
          << fmt_opt(r.acc->min_headway_distance) << ','
          << fmt_opt(r.acc->left_lane_fraction) << ',';
    } else {
      out << ",,,,,,,";
    }
    out << r.config_hash << '\n';
  }
  log_info("wrote " + std::to_string(rows.size()) + " rows to " + o.out);
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  std::string traces, demos, embeddings, ckpt, out;
};

json corr_json(const std::vector<double>& xs, const std::vector<double>& ys,
               maveric::metrics::CorrMethod method) {
  try {
    const auto [r, p] = maveric::metrics::correlate(xs, ys, method);
    return json{{"r", r}, {"p", p}, {"n", xs.size()}};
  } catch (const std::exception& e) {
    log_debug(std::string("correlation skipped: ") + e.what());
    return nullptr;
  }
}

struct Accumulator {
  double sum = 0.0;
  int n = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  json to_json() const {
    if (n == 0) return nullptr;
    return json{{"mean", sum / n}, {"n", n}};
  }
};

void run_report(const ReportOpts& o) {
  std::vector<maveric::sim::Trace> traces;
  for (const fs::path& f : list_traces(o.traces))
    traces.push_back(maveric::sim::read_trace(f.string()));

  std::map<std::string, maveric::metrics::MetricSet> refs;
  if (!o.demos.empty()) {
    for (const fs::path& f : list_traces(o.demos)) {
      const maveric::sim::Trace t = maveric::sim::read_trace(f.string());
      refs.emplace(t.meta.persona_id, maveric::metrics::compute_metrics(t));
    }
  }

  std::set<std::string> hashes;
  std::set<std::string> persona_set;
  std::map<std::string, std::map<std::pair<std::string, std::uint64_t>,
                                 maveric::metrics::MetricSet>>
      by_persona;
  std::vector<double> perp_angle, perp_min_headway, perp_left_lane;
  double perp_adb_min = 0.0, perp_adb_max = 0.0;
  bool have_perp = false;

  for (const maveric::sim::Trace& t : traces) {
    hashes.insert(t.meta.config_hash);
    persona_set.insert(t.meta.persona_id);
    const maveric::metrics::MetricSet m = maveric::metrics::compute_metrics(t);
    if (t.meta.condition == "demo") {
      refs.emplace(t.meta.persona_id, m);
      continue;
    }
    by_persona[t.meta.persona_id][{t.meta.condition, t.meta.seed}] = m;
    if (t.meta.condition == "perp" && t.meta.angle_deg) {
      if (m.min_headway_distance) {
        perp_angle.push_back(*t.meta.angle_deg);
        perp_min_headway.push_back(*m.min_headway_distance);
      }
      perp_left_lane.push_back(m.left_lane_fraction);
      if (!have_perp) {
        perp_adb_min = perp_adb_max = t.meta.adb_score;
        have_perp = true;
      } else {
        perp_adb_min = std::min(perp_adb_min, t.meta.adb_score);
        perp_adb_max = std::max(perp_adb_max, t.meta.adb_score);
      }
    }
  }

  // Condition ordering per (persona, seed) triple.
  int triples = 0, velocity_ordered = 0, lane_ordered = 0;
  for (const auto& [pid, conds] : by_persona) {
    std::set<std::uint64_t> seeds;
    for (const auto& [key, m] : conds) seeds.insert(key.second);
    for (const std::uint64_t s : seeds) {
      const auto agg = conds.find({"aggressive", s});
      const auto mim = conds.find({"mimic", s});
      const auto cau = conds.find({"cautious", s});
      if (agg == conds.end() || mim == conds.end() || cau == conds.end())
        continue;
      ++triples;
      if (agg->second.mean_velocity > mim->second.mean_velocity &&
          mim->second.mean_velocity > cau->second.mean_velocity)
        ++velocity_ordered;
      if (agg->second.lane_change_count >= mim->second.lane_change_count &&
          mim->second.lane_change_count >= cau->second.lane_change_count)
        ++lane_ordered;
    }
  }

  // Mimic accuracies vs demonstration references.
  Accumulator acc_v, acc_ht, acc_mbd, acc_mbt, acc_lc;
  int mimic_rows = 0;
  for (const auto& [pid, conds] : by_persona) {
    const auto ref = refs.find(pid);
    if (ref == refs.end()) continue;
    for (const auto& [key, m] : conds) {
      if (key.first != "mimic") continue;
      const maveric::metrics::MimicAccuracy a =
          maveric::metrics::mimic_accuracy(m, ref->second);
      acc_v.add(a.mean_velocity);
      acc_ht.add(a.mean_headway_time);
      acc_mbd.add(a.distance_headway_merge_back);
      acc_mbt.add(a.time_headway_merge_back);
      acc_lc.add(a.lane_change_count);
      ++mimic_rows;
    }
  }

  // Embedding-gradient correlation over fitted embeddings.
  json projection = nullptr;
  if (!o.embeddings.empty() && !o.ckpt.empty()) {
    const maveric::learn::ModelParams params =
        maveric::learn::load_checkpoint(o.ckpt);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(o.embeddings))
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<double> proj, adb;
    for (const fs::path& f : files) {
      const EmbeddingFile e = read_embedding(f.string());
      if (e.op != "fit" || !e.adb_true) continue;
      proj.push_back(maveric::stylespace::project_on_gradient(params, e.w));
      adb.push_back(*e.adb_true);
    }
    projection = corr_json(proj, adb, maveric::metrics::CorrMethod::PEARSON);
    if (!projection.is_null()) projection["method"] = "pearson";
  }

  json perp_headway =
      corr_json(perp_angle, perp_min_headway, maveric::metrics::CorrMethod::SPEARMAN);
  std::vector<double> perp_angle_all;
  for (const maveric::sim::Trace& t : traces)
    if (t.meta.condition == "perp" && t.meta.angle_deg)
      perp_angle_all.push_back(*t.meta.angle_deg);
  json perp_lane =
      corr_json(perp_angle_all, perp_left_lane, maveric::metrics::CorrMethod::SPEARMAN);

  json j;
  j["config_hashes"] = json(hashes);
  j["counts"] = json{{"traces", traces.size()},
                     {"personas", persona_set.size()},
                     {"ordering_triples", triples},
                     {"mimic_rollouts", mimic_rows}};
  j["correlations"] = json{{"projection_vs_adb", projection},
                           {"perp_angle_vs_min_headway", perp_headway},
                           {"perp_angle_vs_left_lane_fraction", perp_lane}};
  j["ordering"] =
      triples == 0
          ? json(nullptr)
          : json{{"velocity_fraction", double(velocity_ordered) / triples},
                 {"lane_change_fraction", double(lane_ordered) / triples},
                 {"n", triples}};
  j["mimicry"] = json{{"mean_velocity", acc_v.to_json()},
                      {"mean_headway_time", acc_ht.to_json()},
                      {"distance_headway_merge_back", acc_mbd.to_json()},
                      {"time_headway_merge_back", acc_mbt.to_json()},
                      {"lane_change_count", acc_lc.to_json()}};
  j["perp_adb_spread"] = have_perp ? json(perp_adb_max - perp_adb_min) : json(nullptr);

  if (o.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(o.out);
    if (!out) throw std::runtime_error("cannot open for write: " + o.out);
    out << j.dump(2) << "\n";
    log_info("wrote report to " + o.out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  try {
    init_log_level();
  } catch (const UsageError& e) {
    log_error(e.what());
    return 2;
  }

  CLI::App app{"Style-embedding driving pipeline"};
  app.require_subcommand(1);

  GenDataOpts gd;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate persona demonstration traces");
  gen->add_option("--config", gd.config, "Config JSON path");
  gen->add_option("--set", gd.sets, "Override config field, dotted.path=value");
  gen->add_option("--personas", gd.personas, "Evenly spaced persona count");
  gen->add_option("--adb", gd.adb_list, "Explicit ADB scores (overrides --personas)");
  gen->add_option("--duration-s", gd.duration_s, "Demonstration length, seconds");
  gen->add_option("--seed", gd.seed, "Master seed");
  gen->add_option("--out", gd.out, "Output directory")->required();

  TrainOpts tr;
  CLI::App* train = app.add_subcommand("train", "Train the joint model on demonstrations");
  train->add_option("--config", tr.config, "Config JSON path");
  train->add_option("--set", tr.sets, "Override config field, dotted.path=value");
  train->add_option("--data", tr.data, "Demonstration directory")->required();
  train->add_option("--out", tr.out, "Checkpoint path")->required();
  train->add_option("--train-log", tr.train_log, "Per-epoch loss CSV path");
  train->add_option("--seed", tr.seed, "Training seed");

  FitUserOpts fu;
  CLI::App* fit = app.add_subcommand("fit-user", "Fit a new user's embedding, weights frozen");
  fit->add_option("--config", fu.config, "Config JSON path (default: checkpoint's)");
  fit->add_option("--set", fu.sets, "Override config field, dotted.path=value");
  fit->add_option("--ckpt", fu.ckpt, "Checkpoint path")->required();
  fit->add_option("--trace", fu.trace, "Demonstration trace (.jsonl)")->required();
  fit->add_option("--out", fu.out, "Embedding JSON path")->required();
  fit->add_option("--seed", fu.seed, "Fit seed");

  RolloutOpts ro;
  CLI::App* roll = app.add_subcommand("rollout", "Roll out the learned policy in one condition");
  roll->add_option("--config", ro.config, "Config JSON path (default: checkpoint's)");
  roll->add_option("--set", ro.sets, "Override config field, dotted.path=value");
  roll->add_option("--ckpt", ro.ckpt, "Checkpoint path")->required();
  roll->add_option("--embedding", ro.embedding, "Embedding JSON from fit-user")->required();
  roll->add_option("--condition", ro.condition, "mimic | aggressive | cautious | perp")
      ->check(CLI::IsMember({"mimic", "aggressive", "cautious", "perp"}));
  CLI::Option* ro_seed = roll->add_option("--seed", ro.seed, "Scenario seed (default: embedding's)");
  CLI::Option* ro_dur = roll->add_option("--duration-s", ro.duration_s, "Rollout length (default: embedding's)");
  CLI::Option* ro_ang = roll->add_option("--angle-deg", ro.angle_deg, "Ellipse angle for perp");
  CLI::Option* ro_sch = roll->add_option("--schedule-speed", ro.schedule_speed, "Lead schedule anchor, m/s");
  roll->add_option("--out", ro.out, "Output trace path (.jsonl)")->required();

  TraverseOpts sh;
  CLI::App* shift = app.add_subcommand("shift", "Shift an embedding along the aggression gradient");
  shift->add_option("--config", sh.config, "Config JSON path (default: checkpoint's)");
  shift->add_option("--set", sh.sets, "Override config field, dotted.path=value");
  shift->add_option("--ckpt", sh.ckpt, "Checkpoint path")->required();
  shift->add_option("--embedding", sh.embedding, "Embedding JSON");
  shift->add_option("--persona-id", sh.persona_id, "Training persona in the checkpoint");
  shift->add_option("--delta-adb", sh.delta_adb, "ADB points to shift by")->required();
  shift->add_option("--out", sh.out, "Output JSON path (default: stdout)");

  TraverseOpts pp;
  CLI::App* perp = app.add_subcommand("perp", "Sample the ellipse perpendicular to the gradient");
  perp->add_option("--config", pp.config, "Config JSON path (default: checkpoint's)");
  perp->add_option("--set", pp.sets, "Override config field, dotted.path=value");
  perp->add_option("--ckpt", pp.ckpt, "Checkpoint path")->required();
  perp->add_option("--embedding", pp.embedding, "Embedding JSON");
  perp->add_option("--persona-id", pp.persona_id, "Training persona in the checkpoint");
  perp->add_option("--angle-deg", pp.angle_deg, "Ellipse angle, degrees")->required();
  perp->add_option("--out", pp.out, "Output JSON path (default: stdout)");

  EvalOpts ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Per-trace metrics and mimic accuracies CSV");
  eval_cmd->add_option("--traces", ev.traces, "Rollout trace directory")->required();
  eval_cmd->add_option("--demos", ev.demos, "Demonstration directory for references");
  eval_cmd->add_option("--out", ev.out, "Output CSV path")->required();

  ReportOpts rp;
  CLI::App* report = app.add_subcommand("report", "JSON summary with correlations");
  report->add_option("--traces", rp.traces, "Rollout trace directory")->required();
  report->add_option("--demos", rp.demos, "Demonstration directory for references");
  report->add_option("--embeddings", rp.embeddings, "Fitted embedding directory");
  report->add_option("--ckpt", rp.ckpt, "Checkpoint for gradient projection");
  report->add_option("--out", rp.out, "Output JSON path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  ro.seed_set = ro_seed->count() > 0;
  ro.duration_set = ro_dur->count() > 0;
  ro.angle_set = ro_ang->count() > 0;
  ro.schedule_set = ro_sch->count() > 0;

  try {
    if (app.got_subcommand(gen)) run_gen_data(gd);
    else if (app.got_subcommand(train)) run_train(tr);
    else if (app.got_subcommand(fit)) run_fit_user(fu);
    else if (app.got_subcommand(roll)) run_rollout_cmd(ro);
    else if (app.got_subcommand(shift)) run_shift(sh);
    else if (app.got_subcommand(perp)) run_perp(pp);
    else if (app.got_subcommand(eval_cmd)) run_eval(ev);
    else if (app.got_subcommand(report)) run_report(rp);
  } catch (const UsageError& e) {
    log_error(e.what());
    return 2;
  } catch (const maveric::TrainingDiverged& e) {
    log_error(std::string("training diverged: ") + e.what());
    return 4;
  } catch (const std::exception& e) {
    log_error(e.what());
    return 3;
  }
  return 0;
}
