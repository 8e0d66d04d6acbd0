#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace maveric::learn {

/// Reverse-mode tape over dense Eigen matrices. Nodes are created in forward
/// order; backward() replays the tape in reverse, accumulating into grad().
/// Batch dimension is rows throughout.
class Tape {
 public:
  int input(Eigen::MatrixXd value);

  /// x (B x n) * W (n x m) + b (1 x m, broadcast over rows).
  int linear(int x, int w, int b);
  int relu(int x);
  int softplus(int x);
  /// Concatenate columns of the given nodes (equal row counts).
  int concat_cols(const std::vector<int>& xs);
  /// rows of table (P x d) selected per batch element -> (B x d).
  int gather(int table, std::vector<int> indices);
  /// a * x + b elementwise with scalars.
  int scale_shift(int x, double a, double b);
  int exp_(int x);
  int mul(int x, int y);
  int add(int x, int y);
  /// Row-wise softmax.
  int softmax(int x);
  /// Columns [start, start+len) of x.
  int cols(int x, int start, int len);

  /// Scalar node: sum_ij weights_ij (a_ij - b_ij)^2. Gradients flow into both
  /// sides; bake any 1/N normalization into weights.
  int weighted_sse(int a, int b, Eigen::MatrixXd weights);
  /// Scalar node: sum_i weights_i * (-log softmax(logits_i)[labels_i]).
  int weighted_ce(int logits, std::vector<int> labels,
                  std::vector<double> weights);
  /// Scalar node: sum_k coeffs_k * scalars_k.
  int weighted_sum(const std::vector<int>& scalars,
                   const std::vector<double>& coeffs);

  const Eigen::MatrixXd& val(int id) const { return entries_[id].val; }
  const Eigen::MatrixXd& grad(int id) const { return entries_[id].grad; }

  /// Seeds d(loss)/d(loss) = 1 and runs the tape backwards. loss must be 1x1.
  void backward(int loss);

 private:
  struct Entry {
    Eigen::MatrixXd val;
    Eigen::MatrixXd grad;
    std::function<void(Tape&, const Eigen::MatrixXd&)> back;  // null for leaves
  };

  int push(Eigen::MatrixXd value,
           std::function<void(Tape&, const Eigen::MatrixXd&)> back);

  std::vector<Entry> entries_;
};

}  // namespace maveric::learn
