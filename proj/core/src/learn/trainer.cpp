#include "maveric/learn/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "maveric/errors.hpp"
#include "maveric/rng.hpp"

namespace maveric::learn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

BatchInputs make_batch(const std::vector<Sample>& samples,
                       const std::vector<std::size_t>& order,
                       std::size_t start, std::size_t count, int W,
                       double w_neg, double w_pos, Rng* eps_rng) {
  BatchInputs b;
  const auto B = static_cast<Eigen::Index>(count);
  b.v_ev.resize(B, W);
  b.v_lv.resize(B, W);
  b.d_x.resize(B, W);
  b.d_y.resize(B, W);
  b.f_target_n.resize(B);
  b.follow_mask.resize(B);
  b.v_target_n.resize(B);
  b.adb_raw.resize(B);
  b.eps = MatrixXd::Zero(B, kEmbeddingDim);
  b.persona_idx.resize(count);
  b.l_labels.resize(count);
  b.l_weights.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Sample& s = samples[order[start + i]];
    const auto r = static_cast<Eigen::Index>(i);
    b.v_ev.row(r) = s.v_ev.transpose();
    b.v_lv.row(r) = s.v_lv.transpose();
    b.d_x.row(r) = s.d_x.transpose();
    b.d_y.row(r) = s.d_y.transpose();
    b.persona_idx[i] = s.persona_idx;
    b.f_target_n(r) = s.f_target_n;
    b.follow_mask(r) = s.follow_active ? 1.0 : 0.0;
    b.l_labels[i] = s.l_label ? 1 : 0;
    b.l_weights[i] = s.l_label ? w_pos : w_neg;
    b.v_target_n(r) = s.v_target_n;
    b.adb_raw(r) = s.adb_raw;
  }
  if (eps_rng)
    for (Eigen::Index r = 0; r < B; ++r)
      for (int c = 0; c < kEmbeddingDim; ++c) b.eps(r, c) = eps_rng->normal();
  return b;
}

struct AdamState {
  std::vector<MatrixXd> m, v;
  long long t = 0;

  void ensure(const std::vector<std::pair<MatrixXd*, int>>& params) {
    if (!m.empty()) return;
    for (const auto& [ptr, node] : params) {
      m.push_back(MatrixXd::Zero(ptr->rows(), ptr->cols()));
      v.push_back(MatrixXd::Zero(ptr->rows(), ptr->cols()));
    }
  }

  void update(const Tape& tape,
              const std::vector<std::pair<MatrixXd*, int>>& params, double lr,
              double beta1) {
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const MatrixXd& g = tape.grad(params[i].second);
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = kBeta2 * v[i].array().matrix() +
             (1.0 - kBeta2) * g.cwiseProduct(g);
      const MatrixXd mhat = m[i] / bc1;
      const MatrixXd vhat = v[i] / bc2;
      *params[i].first -=
          lr * (mhat.array() / (vhat.array().sqrt() + kEps)).matrix();
    }
  }
};

struct ValLoss {
  double total, l1, l3;
};

ValLoss validation_loss(ModelParams& params, const std::vector<Sample>& val,
                        const LearnConfig& lc, int W, double w_neg,
                        double w_pos) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  if (val.empty()) return {kNaN, kNaN, kNaN};
  std::vector<std::size_t> order(val.size());
  std::iota(order.begin(), order.end(), 0);
  double total = 0.0, t1 = 0.0, t3 = 0.0;
  std::size_t seen = 0;
  const auto bs = static_cast<std::size_t>(lc.batch_size);
  for (std::size_t start = 0; start < val.size(); start += bs) {
    const std::size_t count = std::min(bs, val.size() - start);
    // eps = 0: the posterior term is evaluated at its mean so validation is
    // noise-free and comparable across epochs.
    BatchInputs b =
        make_batch(val, order, start, count, W, w_neg, w_pos, nullptr);
    Tape tape;
    const LossNodes nodes = build_loss_graph(tape, params, b, lc);
    const auto c = static_cast<double>(count);
    total += tape.val(nodes.total)(0, 0) * c;
    t1 += tape.val(nodes.l1)(0, 0) * c;
    t3 += tape.val(nodes.l3)(0, 0) * c;
    seen += count;
  }
  const auto s = static_cast<double>(seen);
  return {total / s, t1 / s, t3 / s};
}

}  // namespace

TrainResult train(const std::vector<sim::Trace>& traces, const Config& cfg,
                  std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& t : traces) {
    bool known = false;
    for (const auto& id : ids) known = known || id == t.meta.persona_id;
    if (!known) ids.push_back(t.meta.persona_id);
  }
  if (ids.size() < 2) throw std::invalid_argument("train: need >= 2 personas");

  const LearnConfig& lc = cfg.learn;
  Normalization norm;
  Dataset ds = build_dataset(traces, cfg, norm, lc.val_fraction);
  norm.class_weight_neg = ds.class_weight_neg;
  norm.class_weight_pos = ds.class_weight_pos;

  ModelParams params = init_params(cfg, ds.persona_ids, ds.persona_adb, seed);
  params.norm = norm;

  Rng shuffle_rng(Rng::derive(seed, 5));
  Rng eps_rng(Rng::derive(seed, 6));
  AdamState adam;
  const int W = cfg.sim.window_steps;

  TrainResult result;
  ModelParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int bad_epochs = 0;

  std::vector<std::size_t> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= lc.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double e1 = 0, e2 = 0, e3 = 0, e4 = 0, e5 = 0;
    int n_batches = 0;
    const auto bs = static_cast<std::size_t>(lc.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t count = std::min(bs, order.size() - start);
      BatchInputs b = make_batch(ds.train, order, start, count, W,
                                 ds.class_weight_neg, ds.class_weight_pos,
                                 &eps_rng);
      Tape tape;
      const LossNodes nodes = build_loss_graph(tape, params, b, lc);
      const double total = tape.val(nodes.total)(0, 0);
      if (!std::isfinite(total))
        throw TrainingDiverged("train: non-finite loss at epoch " +
                               std::to_string(epoch));
      tape.backward(nodes.total);
      adam.ensure(nodes.params);
      adam.update(tape, nodes.params, lc.learning_rate, lc.momentum);

      e1 += tape.val(nodes.l1)(0, 0);
      e2 += tape.val(nodes.l2)(0, 0);
      e3 += tape.val(nodes.l3)(0, 0);
      e4 += tape.val(nodes.l4)(0, 0);
      e5 += tape.val(nodes.l5)(0, 0);
      ++n_batches;
    }

    const ValLoss val = validation_loss(params, ds.val, lc, W,
                                        ds.class_weight_neg,
                                        ds.class_weight_pos);
    EpochLog log;
    log.epoch = epoch;
    log.l1 = e1 / n_batches;
    log.l2 = e2 / n_batches;
    log.l3 = e3 / n_batches;
    log.l4 = e4 / n_batches;
    log.l5 = e5 / n_batches;
    log.val_loss = std::isnan(val.total)
                       ? log.l1 + lc.c2 * log.l2 + log.l3 + lc.c4 * log.l4 + log.l5
                       : val.total;
    log.val_l1 = std::isnan(val.l1) ? log.l1 : val.l1;
    log.val_l3 = std::isnan(val.l3) ? log.l3 : val.l3;
    result.log.push_back(log);

    if (log.val_loss < best_val - 1e-12) {
      best_val = log.val_loss;
      best = params;
      best_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= lc.patience) {
      break;
    }
  }

  result.params = std::move(best);
  result.best_epoch = best_epoch;
  return result;
}

void write_training_log(const std::string& path,
                        const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for write: " + path);
  out << "epoch,L1,L2,L3,L4,L5,val_loss\n";
  char buf[256];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  e.epoch, e.l1, e.l2, e.l3, e.l4, e.l5, e.val_loss);
    out << buf;
  }
}

StyleEmbedding fit_new_user(const ModelParams& frozen, const sim::Trace& trace,
                            const Config& cfg, std::uint64_t seed) {
  const int W = cfg.sim.window_steps;
  if (static_cast<int>(trace.records.size()) * cfg.sim.dt < 60.0)
    throw std::invalid_argument("fit_new_user: trace shorter than 60 s");

  const LearnConfig& lc = cfg.learn;
  Dataset ds = build_dataset({trace}, cfg, frozen.norm, 0.0);

  ModelParams local = frozen;
  local.persona_ids = ds.persona_ids;
  local.persona_adb = ds.persona_adb;

  std::vector<std::size_t> order(ds.train.size());
  const auto bs = static_cast<std::size_t>(lc.batch_size);

  // The fit objective is non-convex in w, so a single prior draw can settle
  // in a poor basin; each restart draws a fresh init and the lowest final
  // loss wins. Stream offsets keep restart 0 identical to a single-start fit.
  const int restarts = std::max(1, lc.fit_restarts);
  MatrixXd best_w;
  double best_loss = std::numeric_limits<double>::infinity();

  for (int k = 0; k < restarts; ++k) {
    Rng init_rng(Rng::derive(seed, 4 + 16 * static_cast<std::uint64_t>(k)));
    local.embeddings = MatrixXd(1, kEmbeddingDim);
    for (int c = 0; c < kEmbeddingDim; ++c)
      local.embeddings(0, c) = init_rng.normal();

    Rng shuffle_rng(Rng::derive(seed, 5 + 16 * static_cast<std::uint64_t>(k)));
    std::iota(order.begin(), order.end(), 0);

    // Momentum/second-moment state for the single embedding row.
    MatrixXd m = MatrixXd::Zero(1, kEmbeddingDim);
    MatrixXd v = MatrixXd::Zero(1, kEmbeddingDim);
    long long t = 0;

    for (int epoch = 1; epoch <= lc.fit_epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::size_t count = std::min(bs, order.size() - start);
        BatchInputs b = make_batch(ds.train, order, start, count, W,
                                   ds.class_weight_neg, ds.class_weight_pos,
                                   nullptr);
        Tape tape;
        const LossNodes nodes = build_loss_graph(tape, local, b, lc);
        const int fit_loss = tape.weighted_sum({nodes.l1, nodes.l2, nodes.l3},
                                               {1.0, lc.c2, 1.0});
        if (!std::isfinite(tape.val(fit_loss)(0, 0)))
          throw FitFailed("fit_new_user: non-finite loss");
        tape.backward(fit_loss);

        const MatrixXd& g = tape.grad(nodes.params.front().second);
        // params.front() is the embedding table by construction.
        ++t;
        const double bc1 = 1.0 - std::pow(lc.momentum, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
        m = lc.momentum * m + (1.0 - lc.momentum) * g;
        v = 0.999 * v + 0.001 * g.cwiseProduct(g);
        local.embeddings -= lc.fit_learning_rate *
                            ((m / bc1).array() /
                             ((v / bc2).array().sqrt() + 1e-8))
                                .matrix();
      }
    }

    // Fixed-order full-trace mean of the fit loss ranks the restarts.
    std::iota(order.begin(), order.end(), 0);
    double sel = 0.0;
    std::size_t total = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t count = std::min(bs, order.size() - start);
      BatchInputs b = make_batch(ds.train, order, start, count, W,
                                 ds.class_weight_neg, ds.class_weight_pos,
                                 nullptr);
      Tape tape;
      const LossNodes nodes = build_loss_graph(tape, local, b, lc);
      const int fit_loss = tape.weighted_sum({nodes.l1, nodes.l2, nodes.l3},
                                             {1.0, lc.c2, 1.0});
      const double val = tape.val(fit_loss)(0, 0);
      if (!std::isfinite(val)) throw FitFailed("fit_new_user: non-finite loss");
      sel += val * static_cast<double>(count);
      total += count;
    }
    sel /= static_cast<double>(total);
    if (sel < best_loss) {
      best_loss = sel;
      best_w = local.embeddings;
    }
  }
  local.embeddings = best_w;

  StyleEmbedding emb;
  emb.w = local.embeddings.row(0).transpose();
  MavericNet net(local);
  emb.adb_score = net.predict_style(emb.w);

  // Mean posterior over (up to) 200 evenly spaced windows of the trace.
  Eigen::Vector3d mu_sum = Eigen::Vector3d::Zero();
  Eigen::Vector3d sigma_sum = Eigen::Vector3d::Zero();
  const std::size_t n = ds.train.size();
  const std::size_t step = std::max<std::size_t>(1, n / 200);
  int used = 0;
  for (std::size_t i = 0; i < n; i += step) {
    const Sample& s = ds.train[i];
    const VectorXd v_lv_raw = s.v_lv * frozen.norm.speed_scale;
    const VectorXd v_ev_raw = s.v_ev * frozen.norm.speed_scale;
    const VectorXd d_x_raw = s.d_x * frozen.norm.gap_scale;
    const VectorXd d_y_raw = s.d_y * frozen.norm.lateral_scale;
    ControlTargets targets;
    targets.f_hat = net.predict_follow(emb.w, v_lv_raw);
    auto [l_hat, z_l] = net.predict_lane(emb.w, v_ev_raw, v_lv_raw, d_x_raw);
    auto [v_hat, z_v] = net.predict_velocity(emb.w, v_lv_raw, d_y_raw, d_x_raw);
    targets.l_hat = l_hat;
    targets.v_hat = v_hat;
    targets.s_hat = emb.adb_score;
    auto [mu, sigma] =
        net.infer_posterior(v_lv_raw(W - 1), z_l, z_v, targets);
    mu_sum += mu;
    sigma_sum += sigma;
    ++used;
  }
  emb.mu = mu_sum / used;
  emb.sigma = sigma_sum / used;
  return emb;
}

}  // namespace maveric::learn
