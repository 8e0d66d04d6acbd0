#include "maveric/learn/network.hpp"

#include <cmath>
#include <stdexcept>

#include "maveric/rng.hpp"

namespace maveric::learn {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

Dense xavier_dense(int in, int out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (in + out));
  Dense d;
  d.W = MatrixXd(in, out);
  for (int r = 0; r < in; ++r)
    for (int c = 0; c < out; ++c) d.W(r, c) = rng.uniform(-limit, limit);
  d.b = MatrixXd::Zero(1, out);
  return d;
}

Dense zero_dense(int in, int out) {
  Dense d;
  d.W = MatrixXd::Zero(in, out);
  d.b = MatrixXd::Zero(1, out);
  return d;
}

std::vector<Dense> mlp(int in, int hidden, int hidden_layers, int out,
                       Rng& rng) {
  std::vector<Dense> layers;
  int prev = in;
  for (int i = 0; i < hidden_layers; ++i) {
    layers.push_back(xavier_dense(prev, hidden, rng));
    prev = hidden;
  }
  layers.push_back(zero_dense(prev, out));
  return layers;
}

double softplus1(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

/// ReLU MLP forward; returns the final pre-activation and fills `penultimate`
/// (the last hidden activation) when requested.
RowVectorXd mlp_forward(const std::vector<Dense>& layers, RowVectorXd x,
                        VectorXd* penultimate = nullptr) {
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    x = (x * layers[i].W + layers[i].b).cwiseMax(0.0);
  }
  if (penultimate) *penultimate = x.transpose();
  return x * layers.back().W + layers.back().b;
}

}  // namespace

ModelParams init_params(const Config& cfg,
                        const std::vector<std::string>& persona_ids,
                        const std::vector<double>& persona_adb,
                        std::uint64_t seed) {
  const int W = cfg.sim.window_steps;
  const int H = cfg.learn.hidden_width;
  const int HL = cfg.learn.hidden_layers;
  Rng rng(Rng::derive(seed, 2));

  ModelParams p;
  p.follow = mlp(kEmbeddingDim + W, H, HL, 1, rng);
  p.lane = mlp(kEmbeddingDim + 3 * W, H, HL, 2, rng);
  p.velocity = mlp(kEmbeddingDim + 3 * W, H, HL, 1, rng);
  p.style = zero_dense(kEmbeddingDim, 1);
  p.mi = mlp(1 + 2 * H + 4, H, HL, 2 * kEmbeddingDim, rng);

  p.embeddings = MatrixXd(static_cast<Eigen::Index>(persona_ids.size()),
                          kEmbeddingDim);
  for (Eigen::Index r = 0; r < p.embeddings.rows(); ++r)
    for (Eigen::Index c = 0; c < kEmbeddingDim; ++c)
      p.embeddings(r, c) = rng.normal();

  p.persona_ids = persona_ids;
  p.persona_adb = persona_adb;
  p.config = cfg;
  return p;
}

namespace {

struct TapeMlp {
  int out;          // final pre-activation node
  int penultimate;  // last hidden activation node
};

TapeMlp tape_mlp(Tape& tape, std::vector<Dense>& layers, int x,
                 std::vector<std::pair<MatrixXd*, int>>& params) {
  int cur = x;
  int penult = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const int w = tape.input(layers[i].W);
    const int b = tape.input(layers[i].b);
    params.emplace_back(&layers[i].W, w);
    params.emplace_back(&layers[i].b, b);
    cur = tape.linear(cur, w, b);
    if (i + 1 < layers.size()) {
      cur = tape.relu(cur);
      penult = cur;
    }
  }
  return {cur, penult};
}

}  // namespace

LossNodes build_loss_graph(Tape& tape, ModelParams& params,
                           const BatchInputs& batch, const LearnConfig& lc) {
  const auto B = static_cast<Eigen::Index>(batch.persona_idx.size());
  LossNodes nodes;

  const int emb_table = tape.input(params.embeddings);
  nodes.params.emplace_back(&params.embeddings, emb_table);
  const int w = tape.gather(emb_table, batch.persona_idx);

  const int v_ev = tape.input(batch.v_ev);
  const int v_lv = tape.input(batch.v_lv);
  const int d_x = tape.input(batch.d_x);
  const int d_y = tape.input(batch.d_y);

  // F: desired following distance.
  const int f_in = tape.concat_cols({w, v_lv});
  const TapeMlp f_net = tape_mlp(tape, params.follow, f_in, nodes.params);
  const int f_out = tape.softplus(f_net.out);

  // C: lane-change probability; z_l is the penultimate activation.
  const int c_in = tape.concat_cols({w, v_ev, v_lv, d_x});
  const TapeMlp c_net = tape_mlp(tape, params.lane, c_in, nodes.params);
  const int c_probs = tape.softmax(c_net.out);
  const int l_hat = tape.cols(c_probs, 1, 1);

  // V: desired velocity; z_v likewise.
  const int v_in = tape.concat_cols({w, v_lv, d_y, d_x});
  const TapeMlp v_net = tape_mlp(tape, params.velocity, v_in, nodes.params);
  const int v_out = tape.softplus(v_net.out);

  // S: affine style head, raw ADB points.
  const int s_w = tape.input(params.style.W);
  const int s_b = tape.input(params.style.b);
  nodes.params.emplace_back(&params.style.W, s_w);
  nodes.params.emplace_back(&params.style.b, s_b);
  const int s_norm = tape.linear(w, s_w, s_b);
  const int s_raw = tape.scale_shift(s_norm, params.norm.adb_span,
                                     params.norm.adb_offset);

  // M: posterior over the embedding from the current lead speed, the two
  // encodings, and the (normalized) targets.
  const int v_lv_now = tape.cols(v_lv, params.config.sim.window_steps - 1, 1);
  const int m_in =
      tape.concat_cols({v_lv_now, c_net.penultimate, v_net.penultimate,
                        f_out, l_hat, v_out, s_norm});
  const TapeMlp m_net = tape_mlp(tape, params.mi, m_in, nodes.params);
  const int mu = tape.cols(m_net.out, 0, kEmbeddingDim);
  const int log_sigma = tape.cols(m_net.out, kEmbeddingDim, kEmbeddingDim);
  const int sigma = tape.exp_(log_sigma);
  const int eps = tape.input(batch.eps);
  const int w_hat = tape.add(mu, tape.mul(sigma, eps));

  // Losses. Follow applies only where a lead was inside lambda.
  const double mask_sum = std::max(1.0, batch.follow_mask.sum());
  const int f_t = tape.input(batch.f_target_n);
  nodes.l1 = tape.weighted_sse(f_out, f_t, batch.follow_mask / mask_sum);

  std::vector<double> ce_w = batch.l_weights;
  for (double& v : ce_w) v /= static_cast<double>(B);
  nodes.l2 = tape.weighted_ce(c_net.out, batch.l_labels, std::move(ce_w));

  const int v_t = tape.input(batch.v_target_n);
  nodes.l3 = tape.weighted_sse(
      v_out, v_t, MatrixXd::Constant(B, 1, 1.0 / static_cast<double>(B)));

  const int adb_t = tape.input(batch.adb_raw);
  nodes.l4 = tape.weighted_sse(
      s_raw, adb_t, MatrixXd::Constant(B, 1, 1.0 / static_cast<double>(B)));

  nodes.l5 = tape.weighted_sse(
      w_hat, w,
      MatrixXd::Constant(B, kEmbeddingDim,
                         1.0 / (static_cast<double>(B) * kEmbeddingDim)));

  nodes.total =
      tape.weighted_sum({nodes.l1, nodes.l2, nodes.l3, nodes.l4, nodes.l5},
                        {1.0, lc.c2, 1.0, lc.c4, 1.0});
  return nodes;
}

namespace {

void check_len(const VectorXd& v, int W, const char* name) {
  if (v.size() != W)
    throw std::invalid_argument(std::string(name) + ": window length mismatch");
}

}  // namespace

double MavericNet::predict_follow(const Vector3d& w,
                                  const VectorXd& v_lv_window) const {
  const int W = p_.config.sim.window_steps;
  check_len(v_lv_window, W, "predict_follow");
  RowVectorXd x(kEmbeddingDim + W);
  x << w.transpose(), (v_lv_window / p_.norm.speed_scale).transpose();
  const RowVectorXd out = mlp_forward(p_.follow, x);
  return p_.norm.follow_scale * softplus1(out(0));
}

std::pair<double, VectorXd> MavericNet::predict_lane(
    const Vector3d& w, const VectorXd& v_ev_window, const VectorXd& v_lv_window,
    const VectorXd& d_x_window) const {
  const int W = p_.config.sim.window_steps;
  check_len(v_ev_window, W, "predict_lane");
  check_len(v_lv_window, W, "predict_lane");
  check_len(d_x_window, W, "predict_lane");
  RowVectorXd x(kEmbeddingDim + 3 * W);
  x << w.transpose(), (v_ev_window / p_.norm.speed_scale).transpose(),
      (v_lv_window / p_.norm.speed_scale).transpose(),
      (d_x_window / p_.norm.gap_scale).transpose();
  VectorXd z_l;
  const RowVectorXd logits = mlp_forward(p_.lane, x, &z_l);
  const double mx = logits.maxCoeff();
  const double e0 = std::exp(logits(0) - mx);
  const double e1 = std::exp(logits(1) - mx);
  return {e1 / (e0 + e1), z_l};
}

std::pair<double, VectorXd> MavericNet::predict_velocity(
    const Vector3d& w, const VectorXd& v_lv_window, const VectorXd& d_y_window,
    const VectorXd& d_x_window) const {
  const int W = p_.config.sim.window_steps;
  check_len(v_lv_window, W, "predict_velocity");
  check_len(d_y_window, W, "predict_velocity");
  check_len(d_x_window, W, "predict_velocity");
  RowVectorXd x(kEmbeddingDim + 3 * W);
  x << w.transpose(), (v_lv_window / p_.norm.speed_scale).transpose(),
      (d_y_window / p_.norm.lateral_scale).transpose(),
      (d_x_window / p_.norm.gap_scale).transpose();
  VectorXd z_v;
  const RowVectorXd out = mlp_forward(p_.velocity, x, &z_v);
  return {p_.norm.speed_scale * softplus1(out(0)), z_v};
}

double MavericNet::predict_style(const Vector3d& w) const {
  const double s_norm = (w.transpose() * p_.style.W)(0) + p_.style.b(0, 0);
  return p_.norm.adb_offset + p_.norm.adb_span * s_norm;
}

std::pair<Vector3d, Vector3d> MavericNet::infer_posterior(
    double v_lv_now, const VectorXd& z_l, const VectorXd& z_v,
    const ControlTargets& targets) const {
  const int H = p_.config.learn.hidden_width;
  if (z_l.size() != H || z_v.size() != H)
    throw std::invalid_argument("infer_posterior: encoding size mismatch");
  RowVectorXd x(1 + 2 * H + 4);
  x(0) = v_lv_now / p_.norm.speed_scale;
  x.segment(1, H) = z_l.transpose();
  x.segment(1 + H, H) = z_v.transpose();
  x(1 + 2 * H + 0) = targets.f_hat / p_.norm.follow_scale;
  x(1 + 2 * H + 1) = targets.l_hat;
  x(1 + 2 * H + 2) = targets.v_hat / p_.norm.speed_scale;
  x(1 + 2 * H + 3) = (targets.s_hat - p_.norm.adb_offset) / p_.norm.adb_span;
  const RowVectorXd out = mlp_forward(p_.mi, x);
  Vector3d mu = out.segment(0, kEmbeddingDim).transpose();
  Vector3d sigma = out.segment(kEmbeddingDim, kEmbeddingDim)
                       .array()
                       .exp()
                       .matrix()
                       .transpose();
  return {mu, sigma};
}

ControlTargets MavericNet::targets_for(const Vector3d& w,
                                       const sim::FeatureWindow& window) const {
  const auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  };
  const VectorXd v_ev = to_vec(window.v_ev);
  const VectorXd v_lv = to_vec(window.v_lv);
  const VectorXd d_x = to_vec(window.d_x);
  const VectorXd d_y = to_vec(window.d_y);

  ControlTargets t;
  t.f_hat = predict_follow(w, v_lv);
  t.l_hat = predict_lane(w, v_ev, v_lv, d_x).first;
  t.v_hat = predict_velocity(w, v_lv, d_y, d_x).first;
  t.s_hat = predict_style(w);
  return t;
}

}  // namespace maveric::learn
