#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "maveric/config.hpp"
#include "maveric/control_targets.hpp"
#include "maveric/learn/graph.hpp"
#include "maveric/sim/types.hpp"

namespace maveric::learn {

struct Dense {
  Eigen::MatrixXd W;  // in x out
  Eigen::MatrixXd b;  // 1 x out
};

/// Input/output scales recorded in the checkpoint so inference is
/// self-contained. Speeds and longitudinal gaps are divided by their scales;
/// the lateral channel by lane width; ADB maps to [0,1] via (s-11)/44. The
/// follow head's softplus output is in units of follow_scale meters.
struct Normalization {
  double speed_scale = 40.0;
  double gap_scale = 500.0;
  double follow_scale = 100.0;
  double lateral_scale = 3.7;
  double adb_offset = 11.0;
  double adb_span = 44.0;
  double class_weight_neg = 1.0;  // lane-change CE weights by label frequency
  double class_weight_pos = 1.0;
};

struct StyleEmbedding {
  Eigen::Vector3d w;
  Eigen::Vector3d mu;
  Eigen::Vector3d sigma;
  double adb_score = 0.0;
};

struct ModelParams {
  std::vector<Dense> follow;    // 33 -> 64 -> 64 -> 1 (softplus)
  std::vector<Dense> lane;      // 93 -> 64 -> 64 -> 2 (softmax)
  std::vector<Dense> velocity;  // 93 -> 64 -> 64 -> 1 (softplus)
  Dense style;                  // 3 -> 1 (affine)
  std::vector<Dense> mi;        // 133 -> 64 -> 64 -> 6 (mu, log sigma)
  Eigen::MatrixXd embeddings;   // P x 3
  std::vector<std::string> persona_ids;
  std::vector<double> persona_adb;
  Normalization norm;
  Config config;
};

/// Fresh parameters: Xavier-uniform hidden layers, zero output layers (so the
/// untrained lane head emits 0.5 and the posterior sigma starts at 1), and
/// embeddings drawn from the N(0,1) prior.
ModelParams init_params(const Config& cfg,
                        const std::vector<std::string>& persona_ids,
                        const std::vector<double>& persona_adb,
                        std::uint64_t seed);

/// One minibatch, already normalized, plus labels and loss weighting.
struct BatchInputs {
  Eigen::MatrixXd v_ev, v_lv, d_x, d_y;  // B x W
  std::vector<int> persona_idx;
  Eigen::VectorXd f_target_n;     // gap labels / follow_scale
  Eigen::VectorXd follow_mask;    // 1 where the follow loss applies
  std::vector<int> l_labels;      // 0 / 1
  std::vector<double> l_weights;  // class weight per sample
  Eigen::VectorXd v_target_n;     // speed labels / speed_scale
  Eigen::VectorXd adb_raw;
  Eigen::MatrixXd eps;  // B x 3 reparameterization noise
};

struct LossNodes {
  int total = -1;
  int l1 = -1, l2 = -1, l3 = -1, l4 = -1, l5 = -1;
  /// Persistent parameter matrix and its tape node, embeddings included.
  std::vector<std::pair<Eigen::MatrixXd*, int>> params;
};

/// Builds the joint forward graph and the five losses on the tape:
/// L = L1 + c2 L2 + L3 + c4 L4 + L5 (L4 on raw ADB points).
LossNodes build_loss_graph(Tape& tape, ModelParams& params,
                           const BatchInputs& batch, const LearnConfig& lc);

/// Inference-path forwards (no tape); numerically identical to the graph.
class MavericNet {
 public:
  explicit MavericNet(ModelParams params) : p_(std::move(params)) {}

  const ModelParams& params() const { return p_; }
  ModelParams& params() { return p_; }

  /// Raw meters; v_lv_window in raw m/s, length W.
  double predict_follow(const Eigen::Vector3d& w,
                        const Eigen::VectorXd& v_lv_window) const;
  /// P(change) and the penultimate activation z_l.
  std::pair<double, Eigen::VectorXd> predict_lane(
      const Eigen::Vector3d& w, const Eigen::VectorXd& v_ev_window,
      const Eigen::VectorXd& v_lv_window,
      const Eigen::VectorXd& d_x_window) const;
  /// Raw m/s and z_v.
  std::pair<double, Eigen::VectorXd> predict_velocity(
      const Eigen::Vector3d& w, const Eigen::VectorXd& v_lv_window,
      const Eigen::VectorXd& d_y_window,
      const Eigen::VectorXd& d_x_window) const;
  /// Raw ADB points (affine in w).
  double predict_style(const Eigen::Vector3d& w) const;
  /// Posterior over the embedding given current lead speed (raw m/s), the two
  /// encodings, and raw-scale targets.
  std::pair<Eigen::Vector3d, Eigen::Vector3d> infer_posterior(
      double v_lv_now, const Eigen::VectorXd& z_l, const Eigen::VectorXd& z_v,
      const ControlTargets& targets) const;

  /// All four predictors on one feature window (raw units in and out).
  ControlTargets targets_for(const Eigen::Vector3d& w,
                             const sim::FeatureWindow& window) const;

 private:
  ModelParams p_;
};

}  // namespace maveric::learn
