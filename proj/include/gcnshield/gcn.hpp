#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "gcnshield/adjacency.hpp"
#include "gcnshield/common.hpp"
#include "gcnshield/graph.hpp"
#include "gcnshield/rng.hpp"

namespace gcnshield {

/// Training hyperparameters. Defaults follow the standard two-layer GCN
/// recipe: hidden 16, lr 0.01, dropout 0.5, weight decay 5e-4 on the first
/// layer, 200 epochs, Adam.
struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 200;
  int hidden_dim = 16;
  double dropout = 0.5;  // drop probability, inverted dropout at train time
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
};

/// Two-layer model without biases: softmax(A relu(A X W0) W1).
struct GcnModel {
  Mat w0;  // F x H
  Mat w1;  // H x C
};

/// Same shape applied without graph propagation: softmax(relu(X W0) W1).
struct MlpModel {
  Mat w0;
  Mat w1;
};

/// Row-stochastic class probabilities, one row per node.
using SoftmaxOutput = Mat;

namespace detail {

inline Mat glorot_uniform(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  Mat w(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) w(r, c) = static_cast<real_t>(rng.uniform(-bound, bound));
  return w;
}

inline void softmax_rows_inplace(Mat& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    const real_t m = row.maxCoeff();
    row = (row.array() - m).exp();
    row /= row.sum();
  }
}

inline Vec softmax(Vec z) {
  const real_t m = z.maxCoeff();
  z = (z.array() - m).exp();
  z /= z.sum();
  return z;
}

inline SpMat to_sparse(const Mat& x) {
  std::vector<Eigen::Triplet<real_t>> trip;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (x(i, j) != real_t(0)) trip.emplace_back(static_cast<int>(i), static_cast<int>(j), x(i, j));
  SpMat s(x.rows(), x.cols());
  s.setFromTriplets(trip.begin(), trip.end());
  s.makeCompressed();
  return s;
}

inline Mat propagate(const SpMat* a, const Mat& m) { return a ? Mat((*a) * m) : m; }

struct CoreGrads {
  double loss = 0;
  Mat d_w0, d_w1;
};

/// Loss and gradients for one step. `a` null means the identity operator
/// (the graph-agnostic baseline). `xd` is the (possibly dropped) input and
/// `hidden_mask` the (possibly null) inverted-dropout scale mask for the
/// second layer's input.
inline CoreGrads grad_step(const Mat& w0, const Mat& w1, const SpMat* a, const SpMat& xd,
                           const Mat* hidden_mask, const LabelVector& labels,
                           const std::vector<int>& train_set, double weight_decay) {
  const auto n_train = static_cast<double>(train_set.size());

  Mat xw = xd * w0;
  Mat z1 = propagate(a, xw);
  Mat h1 = z1.cwiseMax(real_t(0));
  Mat h1d = hidden_mask ? Mat(h1.cwiseProduct(*hidden_mask)) : h1;
  Mat ah1 = propagate(a, h1d);
  Mat z2 = ah1 * w1;

  CoreGrads out;
  Mat d_z2 = Mat::Zero(z2.rows(), z2.cols());
  for (int i : train_set) {
    Vec p = softmax(z2.row(i).transpose());
    const int y = labels[i];
    out.loss -= std::log(std::max(static_cast<double>(p[y]), 1e-300));
    p[y] -= real_t(1);
    d_z2.row(i) = p.transpose() / static_cast<real_t>(n_train);
  }
  out.loss /= n_train;
  out.loss += 0.5 * weight_decay * static_cast<double>(w0.squaredNorm());

  out.d_w1 = ah1.transpose() * d_z2;
  Mat d_h1d = propagate(a, d_z2) * w1.transpose();
  Mat d_h1 = hidden_mask ? Mat(d_h1d.cwiseProduct(*hidden_mask)) : std::move(d_h1d);
  Mat d_z1 = d_h1.cwiseProduct((z1.array() > real_t(0)).cast<real_t>().matrix());
  Mat ad_z1 = propagate(a, d_z1);
  out.d_w0 = xd.transpose() * ad_z1;
  out.d_w0 += static_cast<real_t>(weight_decay) * w0;
  return out;
}

struct AdamState {
  Mat m, v;
  void init(Eigen::Index rows, Eigen::Index cols) {
    m = Mat::Zero(rows, cols);
    v = Mat::Zero(rows, cols);
  }
  void update(Mat& w, const Mat& grad, double lr, int t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    m = real_t(beta1) * m + real_t(1 - beta1) * grad;
    v = real_t(beta2) * v + real_t(1 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    const double step = lr / bc1;
    w -= (static_cast<real_t>(step) * m.array() /
          ((v.array() / static_cast<real_t>(bc2)).sqrt() + static_cast<real_t>(eps)))
             .matrix();
  }
};

inline void train_core(Mat& w0, Mat& w1, const SpMat* a, const SpMat& x_sparse,
                       const LabelVector& labels, const std::vector<int>& train_set,
                       const TrainConfig& cfg, Rng& rng, std::vector<double>* loss_log) {
  if (train_set.empty()) throw ConfigError("train set is empty");
  const double keep = 1.0 - cfg.dropout;
  if (keep <= 0.0 || keep > 1.0) throw ConfigError("dropout must lie in [0, 1)");

  AdamState adam0, adam1;
  adam0.init(w0.rows(), w0.cols());
  adam1.init(w1.rows(), w1.cols());

  const auto n = static_cast<int>(x_sparse.rows());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SpMat xd = x_sparse;
    Mat hidden_mask;
    const Mat* mask_ptr = nullptr;
    if (cfg.dropout > 0.0) {
      // Dropping a stored zero is a no-op, so masking only the stored
      // values of X is exact inverted dropout on the full matrix.
      for (int k = 0; k < xd.nonZeros(); ++k) {
        real_t& val = xd.valuePtr()[k];
        val = rng.uniform() < cfg.dropout ? real_t(0) : val / static_cast<real_t>(keep);
      }
      hidden_mask = Mat(n, w0.cols());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < w0.cols(); ++j)
          hidden_mask(i, j) = rng.uniform() < cfg.dropout ? real_t(0) : real_t(1) / static_cast<real_t>(keep);
      mask_ptr = &hidden_mask;
    }

    CoreGrads g = grad_step(w0, w1, a, xd, mask_ptr, labels, train_set, cfg.weight_decay);
    if (!std::isfinite(g.loss))
      throw TrainingDiverged("training loss became non-finite", epoch + 1);
    if (loss_log) loss_log->push_back(g.loss);

    adam0.update(w0, g.d_w0, cfg.learning_rate, epoch + 1);
    adam1.update(w1, g.d_w1, cfg.learning_rate, epoch + 1);
  }
}

}  // namespace detail

/// Glorot-uniform initialized model; deterministic per rng state.
inline GcnModel init_model(int n_features, int hidden, int n_classes, Rng& rng) {
  if (n_features <= 0 || hidden <= 0 || n_classes <= 0)
    throw ConfigError("model dimensions must be positive");
  GcnModel m;
  m.w0 = detail::glorot_uniform(n_features, hidden, rng);
  m.w1 = detail::glorot_uniform(hidden, n_classes, rng);
  return m;
}

inline MlpModel init_mlp(int n_features, int hidden, int n_classes, Rng& rng) {
  auto m = init_model(n_features, hidden, n_classes, rng);
  return MlpModel{std::move(m.w0), std::move(m.w1)};
}

namespace detail {
inline void check_dims(Eigen::Index xc, Eigen::Index w0r, Eigen::Index w0c, Eigen::Index w1r) {
  if (xc != w0r || w0c != w1r)
    throw InputError("dimension mismatch between features and model weights");
}
}  // namespace detail

/// Full-graph forward pass, dropout disabled.
inline SoftmaxOutput forward(const GcnModel& m, const NormalizedAdjacency& a, const Mat& x) {
  detail::check_dims(x.cols(), m.w0.rows(), m.w0.cols(), m.w1.rows());
  if (a.rows() != x.rows()) throw InputError("adjacency/feature row mismatch");
  Mat z1 = a * Mat(x * m.w0);
  Mat h1 = z1.cwiseMax(real_t(0));
  Mat z2 = a * Mat(h1 * m.w1);
  detail::softmax_rows_inplace(z2);
  return z2;
}

inline SoftmaxOutput predict_mlp(const MlpModel& m, const Mat& x) {
  detail::check_dims(x.cols(), m.w0.rows(), m.w0.cols(), m.w1.rows());
  Mat h1 = Mat(x * m.w0).cwiseMax(real_t(0));
  Mat z2 = h1 * m.w1;
  detail::softmax_rows_inplace(z2);
  return z2;
}

/// Cross-entropy loss over the training set and its exact weight gradients,
/// dropout disabled. Shared with the finite-difference tests.
struct LossGrads {
  double loss;
  Mat d_w0, d_w1;
};

inline LossGrads loss_and_gradients(const GcnModel& m, const NormalizedAdjacency& a, const Mat& x,
                                    const LabelVector& labels, const std::vector<int>& train_set,
                                    double weight_decay) {
  SpMat xs = detail::to_sparse(x);
  auto g = detail::grad_step(m.w0, m.w1, &a, xs, nullptr, labels, train_set, weight_decay);
  return LossGrads{g.loss, std::move(g.d_w0), std::move(g.d_w1)};
}

inline LossGrads loss_and_gradients(const MlpModel& m, const Mat& x, const LabelVector& labels,
                                    const std::vector<int>& train_set, double weight_decay) {
  SpMat xs = detail::to_sparse(x);
  auto g = detail::grad_step(m.w0, m.w1, nullptr, xs, nullptr, labels, train_set, weight_decay);
  return LossGrads{g.loss, std::move(g.d_w0), std::move(g.d_w1)};
}

/// Adam training on cross-entropy over train_set. Returns the final-epoch
/// weights; deterministic given the rng state. Raises TrainingDiverged on a
/// non-finite loss, naming the epoch.
inline GcnModel train(GcnModel m, const NormalizedAdjacency& a, const Mat& x,
                      const LabelVector& labels, const std::vector<int>& train_set,
                      const TrainConfig& cfg, Rng& rng, std::vector<double>* loss_log = nullptr) {
  detail::check_dims(x.cols(), m.w0.rows(), m.w0.cols(), m.w1.rows());
  SpMat xs = detail::to_sparse(x);
  detail::train_core(m.w0, m.w1, &a, xs, labels, train_set, cfg, rng, loss_log);
  return m;
}

inline MlpModel train_mlp(MlpModel m, const Mat& x, const LabelVector& labels,
                          const std::vector<int>& train_set, const TrainConfig& cfg, Rng& rng,
                          std::vector<double>* loss_log = nullptr) {
  detail::check_dims(x.cols(), m.w0.rows(), m.w0.cols(), m.w1.rows());
  SpMat xs = detail::to_sparse(x);
  detail::train_core(m.w0, m.w1, nullptr, xs, labels, train_set, cfg, rng, loss_log);
  return m;
}

/// Virtual replacement of one feature row; the matrix itself is never touched.
struct RowOverlay {
  int row;
  Vec values;
};

namespace detail {

/// Rows of (features * w) for a sorted index set, honoring an overlay.
inline Mat project_rows(const Mat& x, const Mat& w, const std::vector<int>& rows,
                        const RowOverlay* overlay) {
  Mat sub(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (overlay && overlay->row == rows[i])
      sub.row(static_cast<Eigen::Index>(i)) = overlay->values.transpose();
    else
      sub.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return sub * w;
}

}  // namespace detail

/// Prediction at one node via its 2-hop neighborhood only. Normalization
/// entries use full-graph degrees, so the result equals the corresponding
/// row of forward() on the whole graph.
inline Vec predict_node_local(const GcnModel& m, const Graph& g, const Mat& x, int v,
                              const RowOverlay* overlay = nullptr) {
  detail::check_dims(x.cols(), m.w0.rows(), m.w0.cols(), m.w1.rows());
  if (v < 0 || v >= g.n_nodes()) throw InputError("node out of range");

  const std::vector<int> hop1 = l_hop_neighborhood(g, v, 1);
  const std::vector<int> hop2 = l_hop_neighborhood(g, v, 2);
  std::unordered_map<int, int> pos2;
  pos2.reserve(hop2.size());
  for (std::size_t i = 0; i < hop2.size(); ++i) pos2.emplace(hop2[i], static_cast<int>(i));

  const Mat xw = detail::project_rows(x, m.w0, hop2, overlay);

  // First layer at the 1-hop nodes, accumulated in ascending neighbor order
  // (self-loop merged at its sorted position) to mirror the sparse product.
  Mat h1(static_cast<Eigen::Index>(hop1.size()), m.w0.cols());
  for (std::size_t i = 0; i < hop1.size(); ++i) {
    const int u = hop1[i];
    Eigen::RowVectorX<real_t> acc = Eigen::RowVectorX<real_t>::Zero(m.w0.cols());
    bool self_done = false;
    for (int w : g.neighbors(u)) {
      if (!self_done && u < w) {
        acc += normalized_entry(g, u, u) * xw.row(pos2.at(u));
        self_done = true;
      }
      acc += normalized_entry(g, u, w) * xw.row(pos2.at(w));
    }
    if (!self_done) acc += normalized_entry(g, u, u) * xw.row(pos2.at(u));
    h1.row(static_cast<Eigen::Index>(i)) = acc.cwiseMax(real_t(0));
  }

  const Mat hw = h1 * m.w1;
  std::unordered_map<int, int> pos1;
  for (std::size_t i = 0; i < hop1.size(); ++i) pos1.emplace(hop1[i], static_cast<int>(i));
  Eigen::RowVectorX<real_t> z2 = Eigen::RowVectorX<real_t>::Zero(m.w1.cols());
  bool self_done = false;
  for (int u : g.neighbors(v)) {
    if (!self_done && v < u) {
      z2 += normalized_entry(g, v, v) * hw.row(pos1.at(v));
      self_done = true;
    }
    z2 += normalized_entry(g, v, u) * hw.row(pos1.at(u));
  }
  if (!self_done) z2 += normalized_entry(g, v, v) * hw.row(pos1.at(v));

  return detail::softmax(z2.transpose());
}

}  // namespace gcnshield
