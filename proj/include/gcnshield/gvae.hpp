#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gcnshield/adjacency.hpp"
#include "gcnshield/common.hpp"
#include "gcnshield/gcn.hpp"
#include "gcnshield/graph.hpp"
#include "gcnshield/rng.hpp"

namespace gcnshield {

struct GvaeConfig {
  int hidden_dim = 32;
  int latent_dim = 16;
  double learning_rate = 0.01;
  int epochs = 200;
  int log_every = 10;    // loss evaluated/logged at these epochs plus the last
  int chunk_rows = 256;  // decoder gradient is computed this many rows at a time
  std::uint64_t seed = 0;
};

/// Variational graph autoencoder: a shared GCN layer feeding mean and
/// log-variance heads, with an inner-product edge decoder.
struct GvaeModel {
  Mat w_enc;     // F x H
  Mat w_mu;      // H x d
  Mat w_logvar;  // H x d
  int latent_dim() const { return static_cast<int>(w_mu.cols()); }
};

struct GvaeTrainLog {
  std::vector<int> epochs;      // 1-based epoch numbers that were logged
  std::vector<double> losses;   // total loss at those epochs
  std::vector<double> kl;       // KL component, same indexing
};

namespace detail {

/// Deterministic shared encoder pass. Returns A*relu(A X We) so both heads
/// and their gradients reuse the propagated hidden activations.
struct GvaeForward {
  Mat z_pre;  // A (X We), pre-activation
  Mat ah;     // A relu(z_pre)
  Mat mu;     // ah w_mu
  Mat logvar; // ah w_logvar
};

inline GvaeForward gvae_forward(const GvaeModel& m, const SpMat& a, const SpMat& xs) {
  GvaeForward f;
  f.z_pre = a * Mat(xs * m.w_enc);
  f.ah = a * Mat(f.z_pre.cwiseMax(real_t(0)));
  f.mu = f.ah * m.w_mu;
  f.logvar = f.ah * m.w_logvar;
  return f;
}

}  // namespace detail

/// Trains the GVAE on the (attacked) graph with the reweighted reconstruction
/// loss against A+I plus the KL term, by Adam. The N x N decoder is never
/// materialized; its gradient is accumulated in row chunks. Deterministic per
/// rng state. Raises TrainingDiverged if the loss goes non-finite.
inline GvaeModel train_gvae(const Graph& g, const Mat& x, const GvaeConfig& cfg, Rng& rng,
                            GvaeTrainLog* log = nullptr) {
  if (cfg.hidden_dim <= 0 || cfg.latent_dim <= 0) throw ConfigError("GVAE dims must be positive");
  if (cfg.epochs < 0) throw ConfigError("epochs must be nonnegative");
  const int n = g.n_nodes();
  if (n == 0 || x.rows() != n) throw InputError("feature/graph size mismatch");

  GvaeModel m;
  m.w_enc = detail::glorot_uniform(static_cast<int>(x.cols()), cfg.hidden_dim, rng);
  m.w_mu = detail::glorot_uniform(cfg.hidden_dim, cfg.latent_dim, rng);
  m.w_logvar = detail::glorot_uniform(cfg.hidden_dim, cfg.latent_dim, rng);

  const SpMat a = normalized_adjacency(g);
  const SpMat xs = detail::to_sparse(x);

  // Reweighting constants for the dense target T = A + I.
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const double ones = static_cast<double>(n) + 2.0 * static_cast<double>(g.n_edges());
  const double zeros = n2 - ones;
  if (zeros <= 0.0) throw ConfigError("graph is complete; reconstruction loss is degenerate");
  const double pos_weight = zeros / ones;
  const double norm = n2 / (2.0 * zeros);
  const double cfac = norm / n2;  // per-pair gradient scale

  detail::AdamState ad_enc, ad_mu, ad_lo;
  ad_enc.init(m.w_enc.rows(), m.w_enc.cols());
  ad_mu.init(m.w_mu.rows(), m.w_mu.cols());
  ad_lo.init(m.w_logvar.rows(), m.w_logvar.cols());

  const int d = cfg.latent_dim;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool log_this = log && (epoch % cfg.log_every == 0 || epoch == cfg.epochs - 1);

    auto f = detail::gvae_forward(m, a, xs);
    Mat eps(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) eps(i, j) = static_cast<real_t>(rng.normal());
    Mat sigma = (f.logvar.array() * real_t(0.5)).exp();
    Mat z = f.mu + sigma.cwiseProduct(eps);
    if (!z.allFinite()) throw TrainingDiverged("latent sample became non-finite", epoch + 1);

    // Reconstruction gradient dL/dZ = 2 G Z with G_ij = cfac * sigmoid(s_ij)
    // for target 0 and cfac * pos_weight * (sigmoid(s_ij) - 1) for target 1,
    // where s = Z Z^T. Chunked over rows to stay O(chunk x N) in memory.
    Mat dz = Mat::Zero(n, d);
    double ce = 0.0;
    for (int r0 = 0; r0 < n; r0 += cfg.chunk_rows) {
      const int rc = std::min(cfg.chunk_rows, n - r0);
      Mat s = z.middleRows(r0, rc) * z.transpose();
      Mat grad = ((real_t(1) + (-s.array()).exp()).inverse() * static_cast<real_t>(cfac)).matrix();
      if (log_this) {
        // softplus(s) = -log(1 - sigmoid(s)), the target-0 loss term
        ce += (s.array().max(real_t(0)) + (-s.array().abs()).exp().log1p()).sum() * norm / n2;
      }
      for (int i = 0; i < rc; ++i) {
        const int gi = r0 + i;
        auto fix_one = [&](int j) {
          const real_t sij = s(i, j);
          // sigmoid - 1 computed stably as -sigmoid(-s)
          const real_t sm1 = real_t(-1) / (real_t(1) + std::exp(sij));
          grad(i, j) = static_cast<real_t>(cfac * pos_weight) * sm1;
          if (log_this) {
            const double sp0 = std::max(0.0, static_cast<double>(sij)) +
                               std::log1p(std::exp(-std::abs(static_cast<double>(sij))));
            const double sp1 = sp0 - static_cast<double>(sij);  // softplus(-s)
            ce += (pos_weight * sp1 - sp0) * norm / n2;         // replace the 0-target term
          }
        };
        fix_one(gi);
        for (int j : g.neighbors(gi)) fix_one(j);
      }
      dz.middleRows(r0, rc) = real_t(2) * grad * z;
    }

    // KL(q || N(0, I)) / N^2 and its gradients w.r.t. mu and logvar.
    const double kl =
        0.5 *
        (f.mu.array().square() + f.logvar.array().exp() - f.logvar.array() - real_t(1)).sum() / n2;
    Mat d_mu = dz + (f.mu / static_cast<real_t>(n2));
    Mat d_logvar = dz.cwiseProduct(eps).cwiseProduct(sigma) * real_t(0.5) +
                   real_t(0.5) * (f.logvar.array().exp() - real_t(1)).matrix() / static_cast<real_t>(n2);

    if (log_this) {
      const double loss = ce + kl;
      if (!std::isfinite(loss)) throw TrainingDiverged("GVAE loss became non-finite", epoch + 1);
      log->epochs.push_back(epoch + 1);
      log->losses.push_back(loss);
      log->kl.push_back(kl);
    }
    if (!std::isfinite(kl)) throw TrainingDiverged("GVAE KL term became non-finite", epoch + 1);

    Mat d_wmu = f.ah.transpose() * d_mu;
    Mat d_wlo = f.ah.transpose() * d_logvar;
    Mat d_h = a * Mat(d_mu * m.w_mu.transpose() + d_logvar * m.w_logvar.transpose());
    Mat d_zpre = d_h.cwiseProduct((f.z_pre.array() > real_t(0)).cast<real_t>().matrix());
    Mat d_wenc = xs.transpose() * Mat(a * d_zpre);

    ad_enc.update(m.w_enc, d_wenc, cfg.learning_rate, epoch + 1);
    ad_mu.update(m.w_mu, d_wmu, cfg.learning_rate, epoch + 1);
    ad_lo.update(m.w_logvar, d_wlo, cfg.learning_rate, epoch + 1);
  }
  return m;
}

/// Embedding = the encoder means; no latent sampling at inference.
inline Mat embed(const GvaeModel& m, const Graph& g, const Mat& x) {
  if (x.rows() != g.n_nodes()) throw InputError("feature/graph size mismatch");
  const SpMat a = normalized_adjacency(g);
  const SpMat xs = detail::to_sparse(x);
  return detail::gvae_forward(m, a, xs).mu;
}

}  // namespace gcnshield
