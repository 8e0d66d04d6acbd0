#include "maveric/learn/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace maveric::learn {

using Eigen::MatrixXd;

int Tape::push(MatrixXd value,
               std::function<void(Tape&, const MatrixXd&)> back) {
  Entry e;
  e.grad = MatrixXd::Zero(value.rows(), value.cols());
  e.val = std::move(value);
  e.back = std::move(back);
  entries_.push_back(std::move(e));
  return static_cast<int>(entries_.size()) - 1;
}

int Tape::input(MatrixXd value) { return push(std::move(value), nullptr); }

int Tape::linear(int x, int w, int b) {
  const MatrixXd& X = val(x);
  const MatrixXd& W = val(w);
  const MatrixXd& B = val(b);
  if (X.cols() != W.rows() || B.rows() != 1 || B.cols() != W.cols())
    throw std::invalid_argument("linear: dimension mismatch");
  MatrixXd out = (X * W).rowwise() + B.row(0);
  return push(std::move(out), [x, w, b](Tape& t, const MatrixXd& g) {
    t.entries_[x].grad += g * t.val(w).transpose();
    t.entries_[w].grad += t.val(x).transpose() * g;
    t.entries_[b].grad += g.colwise().sum();
  });
}

int Tape::relu(int x) {
  MatrixXd out = val(x).cwiseMax(0.0);
  return push(std::move(out), [x](Tape& t, const MatrixXd& g) {
    t.entries_[x].grad +=
        (t.val(x).array() > 0.0).cast<double>().matrix().cwiseProduct(g);
  });
}

int Tape::softplus(int x) {
  const MatrixXd& X = val(x);
  MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    const double v = X(i);
    out(i) = v > 30.0 ? v : std::log1p(std::exp(v));
  }
  return push(std::move(out), [x](Tape& t, const MatrixXd& g) {
    const MatrixXd& X = t.val(x);
    MatrixXd sig(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.size(); ++i)
      sig(i) = 1.0 / (1.0 + std::exp(-X(i)));
    t.entries_[x].grad += sig.cwiseProduct(g);
  });
}

int Tape::concat_cols(const std::vector<int>& xs) {
  Eigen::Index rows = val(xs.front()).rows();
  Eigen::Index total = 0;
  for (int id : xs) {
    if (val(id).rows() != rows)
      throw std::invalid_argument("concat_cols: row mismatch");
    total += val(id).cols();
  }
  MatrixXd out(rows, total);
  Eigen::Index off = 0;
  for (int id : xs) {
    out.middleCols(off, val(id).cols()) = val(id);
    off += val(id).cols();
  }
  return push(std::move(out), [xs](Tape& t, const MatrixXd& g) {
    Eigen::Index off = 0;
    for (int id : xs) {
      const Eigen::Index c = t.val(id).cols();
      t.entries_[id].grad += g.middleCols(off, c);
      off += c;
    }
  });
}

int Tape::gather(int table, std::vector<int> indices) {
  const MatrixXd& T = val(table);
  MatrixXd out(static_cast<Eigen::Index>(indices.size()), T.cols());
  for (std::size_t i = 0; i < indices.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = T.row(indices[i]);
  return push(std::move(out),
              [table, idx = std::move(indices)](Tape& t, const MatrixXd& g) {
                for (std::size_t i = 0; i < idx.size(); ++i)
                  t.entries_[table].grad.row(idx[i]) +=
                      g.row(static_cast<Eigen::Index>(i));
              });
}

int Tape::scale_shift(int x, double a, double b) {
  MatrixXd out = (val(x).array() * a + b).matrix();
  return push(std::move(out), [x, a](Tape& t, const MatrixXd& g) {
    t.entries_[x].grad += a * g;
  });
}

int Tape::exp_(int x) {
  MatrixXd out = val(x).array().exp().matrix();
  const int id = push(std::move(out), nullptr);
  entries_[id].back = [x, id](Tape& t, const MatrixXd& g) {
    t.entries_[x].grad += t.val(id).cwiseProduct(g);
  };
  return id;
}

int Tape::mul(int x, int y) {
  MatrixXd out = val(x).cwiseProduct(val(y));
  return push(std::move(out), [x, y](Tape& t, const MatrixXd& g) {
    t.entries_[x].grad += t.val(y).cwiseProduct(g);
    t.entries_[y].grad += t.val(x).cwiseProduct(g);
  });
}

int Tape::add(int x, int y) {
  MatrixXd out = val(x) + val(y);
  return push(std::move(out), [x, y](Tape& t, const MatrixXd& g) {
    t.entries_[x].grad += g;
    t.entries_[y].grad += g;
  });
}

int Tape::softmax(int x) {
  const MatrixXd& X = val(x);
  MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const double mx = X.row(r).maxCoeff();
    Eigen::RowVectorXd e = (X.row(r).array() - mx).exp();
    out.row(r) = e / e.sum();
  }
  const int id = push(std::move(out), nullptr);
  entries_[id].back = [x, id](Tape& t, const MatrixXd& g) {
    const MatrixXd& P = t.val(id);
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
      const double dot = P.row(r).dot(g.row(r));
      t.entries_[x].grad.row(r) +=
          P.row(r).cwiseProduct(g.row(r) - Eigen::RowVectorXd::Constant(P.cols(), dot));
    }
  };
  return id;
}

int Tape::cols(int x, int start, int len) {
  MatrixXd out = val(x).middleCols(start, len);
  return push(std::move(out), [x, start, len](Tape& t, const MatrixXd& g) {
    t.entries_[x].grad.middleCols(start, len) += g;
  });
}

int Tape::weighted_sse(int a, int b, MatrixXd weights) {
  const MatrixXd diff = val(a) - val(b);
  MatrixXd out(1, 1);
  out(0, 0) = weights.cwiseProduct(diff).cwiseProduct(diff).sum();
  return push(std::move(out),
              [a, b, w = std::move(weights)](Tape& t, const MatrixXd& g) {
                const MatrixXd d =
                    2.0 * g(0, 0) * w.cwiseProduct(t.val(a) - t.val(b));
                t.entries_[a].grad += d;
                t.entries_[b].grad -= d;
              });
}

int Tape::weighted_ce(int logits, std::vector<int> labels,
                      std::vector<double> weights) {
  const MatrixXd& Z = val(logits);
  if (static_cast<std::size_t>(Z.rows()) != labels.size() ||
      labels.size() != weights.size())
    throw std::invalid_argument("weighted_ce: size mismatch");
  // Row-stable log-sum-exp; probs cached for the backward pass.
  MatrixXd probs(Z.rows(), Z.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < Z.rows(); ++r) {
    const double mx = Z.row(r).maxCoeff();
    Eigen::RowVectorXd e = (Z.row(r).array() - mx).exp();
    const double sum = e.sum();
    probs.row(r) = e / sum;
    const double logp = Z(r, labels[r]) - mx - std::log(sum);
    loss -= weights[r] * logp;
  }
  MatrixXd out(1, 1);
  out(0, 0) = loss;
  return push(std::move(out),
              [logits, lb = std::move(labels), w = std::move(weights),
               probs = std::move(probs)](Tape& t, const MatrixXd& g) {
                MatrixXd d = probs;
                for (Eigen::Index r = 0; r < d.rows(); ++r) {
                  d(r, lb[r]) -= 1.0;
                  d.row(r) *= w[r] * g(0, 0);
                }
                t.entries_[logits].grad += d;
              });
}

int Tape::weighted_sum(const std::vector<int>& scalars,
                       const std::vector<double>& coeffs) {
  double total = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i)
    total += coeffs[i] * val(scalars[i])(0, 0);
  MatrixXd out(1, 1);
  out(0, 0) = total;
  return push(std::move(out),
              [xs = scalars, cs = coeffs](Tape& t, const MatrixXd& g) {
                for (std::size_t i = 0; i < xs.size(); ++i)
                  t.entries_[xs[i]].grad(0, 0) += cs[i] * g(0, 0);
              });
}

void Tape::backward(int loss) {
  if (val(loss).rows() != 1 || val(loss).cols() != 1)
    throw std::invalid_argument("backward: loss must be 1x1");
  for (Entry& e : entries_) e.grad.setZero();
  entries_[loss].grad(0, 0) = 1.0;
  for (int i = loss; i >= 0; --i)
    if (entries_[i].back) entries_[i].back(*this, entries_[i].grad);
}

}  // namespace maveric::learn
