#include "maveric/learn/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "maveric/errors.hpp"

namespace maveric::learn {
namespace {

using nlohmann::json;
using Eigen::MatrixXd;

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

json dense_json(const Dense& d) {
  return json{{"shape", {d.W.rows(), d.W.cols()}},
              {"w", matrix_json(d.W)},
              {"b", matrix_json(d.b)}};
}

Dense dense_from(const json& j) {
  Dense d;
  d.W = matrix_from(j.at("w"));
  d.b = matrix_from(j.at("b"));
  const auto& shape = j.at("shape");
  if (d.W.rows() != shape.at(0).get<Eigen::Index>() ||
      d.W.cols() != shape.at(1).get<Eigen::Index>())
    throw ParseError("checkpoint: dense shape mismatch");
  return d;
}

json subnet_json(const std::vector<Dense>& layers) {
  json arr = json::array();
  for (const Dense& d : layers) arr.push_back(dense_json(d));
  return arr;
}

std::vector<Dense> subnet_from(const json& j) {
  std::vector<Dense> layers;
  for (const json& d : j) layers.push_back(dense_from(d));
  return layers;
}

json norm_json(const Normalization& n) {
  return json{{"speed_scale", n.speed_scale},
              {"gap_scale", n.gap_scale},
              {"follow_scale", n.follow_scale},
              {"lateral_scale", n.lateral_scale},
              {"adb_offset", n.adb_offset},
              {"adb_span", n.adb_span},
              {"class_weight_neg", n.class_weight_neg},
              {"class_weight_pos", n.class_weight_pos}};
}

Normalization norm_from(const json& j) {
  Normalization n;
  n.speed_scale = j.at("speed_scale").get<double>();
  n.gap_scale = j.at("gap_scale").get<double>();
  n.follow_scale = j.at("follow_scale").get<double>();
  n.lateral_scale = j.at("lateral_scale").get<double>();
  n.adb_offset = j.at("adb_offset").get<double>();
  n.adb_span = j.at("adb_span").get<double>();
  n.class_weight_neg = j.at("class_weight_neg").get<double>();
  n.class_weight_pos = j.at("class_weight_pos").get<double>();
  return n;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
  json j;
  j["version"] = 1;
  j["config"] = json::parse(params.config.canonical_json());
  j["config_hash"] = params.config.hash();
  j["normalization"] = norm_json(params.norm);
  j["subnets"] = json{{"follow", subnet_json(params.follow)},
                      {"lane", subnet_json(params.lane)},
                      {"velocity", subnet_json(params.velocity)},
                      {"style", dense_json(params.style)},
                      {"mi", subnet_json(params.mi)}};

  std::vector<std::size_t> order(params.persona_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return params.persona_ids[a] < params.persona_ids[b];
  });
  json embs = json::array();
  for (std::size_t i : order) {
    json w = json::array();
    for (Eigen::Index c = 0; c < params.embeddings.cols(); ++c)
      w.push_back(params.embeddings(static_cast<Eigen::Index>(i), c));
    embs.push_back(json{{"persona_id", params.persona_ids[i]},
                        {"adb_score", params.persona_adb[i]},
                        {"w", std::move(w)}});
  }
  j["embeddings"] = std::move(embs);

  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for write: " + path);
  out << j.dump(2) << '\n';
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (j.at("version").get<int>() != 1)
    throw ParseError("checkpoint: unsupported version");

  ModelParams p;
  p.config = Config::from_json_text(j.at("config").dump());
  p.norm = norm_from(j.at("normalization"));
  const json& nets = j.at("subnets");
  p.follow = subnet_from(nets.at("follow"));
  p.lane = subnet_from(nets.at("lane"));
  p.velocity = subnet_from(nets.at("velocity"));
  p.style = dense_from(nets.at("style"));
  p.mi = subnet_from(nets.at("mi"));

  const json& embs = j.at("embeddings");
  p.embeddings = MatrixXd(static_cast<Eigen::Index>(embs.size()), kEmbeddingDim);
  Eigen::Index r = 0;
  for (const json& e : embs) {
    p.persona_ids.push_back(e.at("persona_id").get<std::string>());
    p.persona_adb.push_back(e.at("adb_score").get<double>());
    for (Eigen::Index c = 0; c < kEmbeddingDim; ++c)
      p.embeddings(r, c) = e.at("w").at(c).get<double>();
    ++r;
  }
  return p;
}

}  // namespace maveric::learn
