#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "mobgcn/autodiff.hpp"
#include "mobgcn/errors.hpp"
#include "mobgcn/matrix.hpp"

namespace mobgcn {

enum class ForwardMode { Train, Eval };

/// Symmetric self-loop normalization D~^{-1/2} (A + I) D~^{-1/2}.
inline Matrix normalized_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("normalized_adjacency: square matrix required");
  const std::size_t n = a.rows();
  Matrix ahat = a;
  for (std::size_t i = 0; i < n; ++i) ahat(i, i) += 1.0;
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += ahat(i, j);
    dinv[i] = 1.0 / std::sqrt(deg > 1e-12 ? deg : 1e-12);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ahat(i, j) *= dinv[i] * dinv[j];
  return ahat;
}

namespace detail {

inline Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.raw()) v = dist(rng);
  return m;
}

}  // namespace detail

/// Two-layer GCN: logits = Ahat . relu(Ahat . X . W1 + b1) . W2 + b2.
struct GcnBaseline {
  Matrix W1, b1, W2, b2;

  static GcnBaseline init(std::size_t d, std::size_t hidden, std::size_t c,
                          std::mt19937_64& rng) {
    GcnBaseline m;
    m.W1 = detail::glorot(d, hidden, rng);
    m.b1 = Matrix(1, hidden);
    m.W2 = detail::glorot(hidden, c, rng);
    m.b2 = Matrix(1, c);
    return m;
  }

  std::vector<Matrix*> params() { return {&W1, &b1, &W2, &b2}; }
  std::vector<const Matrix*> params() const { return {&W1, &b1, &W2, &b2}; }
};

struct GcnBinding {
  ad::NodeId W1, b1, W2, b2;
};

inline GcnBinding bind(ad::Tape& tape, const GcnBaseline& m, bool trainable = true) {
  auto reg = [&](const Matrix& v) { return trainable ? tape.parameter(v) : tape.constant(v); };
  return GcnBinding{reg(m.W1), reg(m.b1), reg(m.W2), reg(m.b2)};
}

inline ad::NodeId gcn_forward(ad::Tape& tape, ad::NodeId X, ad::NodeId Ahat,
                              const GcnBinding& b) {
  ad::NodeId h = tape.relu(tape.add_rowvec(tape.matmul(tape.matmul(Ahat, X), b.W1), b.b1));
  return tape.add_rowvec(tape.matmul(tape.matmul(Ahat, h), b.W2), b.b2);
}

/// softmax((logits + G)/tau) with i.i.d. Gumbel(0,1) noise when training;
/// eval mode drops the noise.
inline ad::NodeId gumbel_softmax(ad::Tape& tape, ad::NodeId logits, double tau, ForwardMode mode,
                                 std::mt19937_64& rng) {
  if (tau <= 0.0) throw ConfigError("gumbel_softmax: tau must be positive");
  ad::NodeId x = logits;
  if (mode == ForwardMode::Train) {
    const Matrix& lv = tape.value(logits);
    Matrix noise(lv.rows(), lv.cols());
    std::uniform_real_distribution<double> u(1e-12, 1.0);
    for (double& g : noise.raw()) g = -std::log(-std::log(u(rng)));
    x = tape.add(x, tape.constant(std::move(noise)));
  }
  return tape.row_softmax(tape.scalar_mul(x, 1.0 / tau));
}

/// Cluster-aggregate features and adjacency: X' = l2norm(assign^T L),
/// A' = D^{-1/2} (assign^T A assign) D^{-1/2}, diagonal retained.
inline std::pair<ad::NodeId, ad::NodeId> coarsen(ad::Tape& tape, ad::NodeId assign, ad::NodeId L,
                                                 ad::NodeId A) {
  const ad::NodeId at = tape.transpose(assign);
  const ad::NodeId xp = tape.row_l2_normalize(tape.matmul(at, L));

  const ad::NodeId m = tape.matmul(tape.matmul(at, A), assign);
  const std::size_t k = tape.value(m).rows();
  const ad::NodeId deg = tape.matmul(m, tape.constant(Matrix(k, 1, 1.0)));
  const ad::NodeId s = tape.elementwise_rsqrt(deg);        // k x 1
  const ad::NodeId scale = tape.matmul(s, tape.transpose(s));  // rank-1, k x k
  const ad::NodeId ap = tape.elementwise_mul(scale, m);
  return {xp, ap};
}

/// Bottom GCN encoder plus per-resolution pool/encode levels whose latents
/// are mapped back to the fine nodes and concatenated for the classifier.
struct MobGcnModel {
  std::size_t d = 0;
  std::size_t hidden = 32;
  std::size_t classes = 0;
  std::vector<std::size_t> resolutions;
  double tau = 1.0;
  bool use_norm = true;

  Matrix Wb, bb;  // bottom encoder, d -> hidden
  struct Level {
    Matrix pool_W, pool_b;  // hidden -> r
    Matrix enc_W, enc_b;    // hidden -> hidden
  };
  std::vector<Level> levels;
  Matrix Wf, bf;  // hidden*(|R|+1) -> classes

  static MobGcnModel init(std::size_t d, std::size_t hidden, std::size_t classes,
                          std::vector<std::size_t> resolutions, std::mt19937_64& rng,
                          double tau = 1.0, bool use_norm = true) {
    MobGcnModel m;
    m.d = d;
    m.hidden = hidden;
    m.classes = classes;
    m.resolutions = std::move(resolutions);
    m.tau = tau;
    m.use_norm = use_norm;
    m.Wb = detail::glorot(d, hidden, rng);
    m.bb = Matrix(1, hidden);
    for (std::size_t r : m.resolutions) {
      Level lv;
      lv.pool_W = detail::glorot(hidden, r, rng);
      lv.pool_b = Matrix(1, r);
      lv.enc_W = detail::glorot(hidden, hidden, rng);
      lv.enc_b = Matrix(1, hidden);
      m.levels.push_back(std::move(lv));
    }
    m.Wf = detail::glorot(hidden * (m.resolutions.size() + 1), classes, rng);
    m.bf = Matrix(1, classes);
    return m;
  }

  std::vector<Matrix*> params() {
    std::vector<Matrix*> ps{&Wb, &bb};
    for (Level& lv : levels) {
      ps.push_back(&lv.pool_W);
      ps.push_back(&lv.pool_b);
      ps.push_back(&lv.enc_W);
      ps.push_back(&lv.enc_b);
    }
    ps.push_back(&Wf);
    ps.push_back(&bf);
    return ps;
  }
};

struct MobGcnBinding {
  ad::NodeId Wb, bb;
  struct Level {
    ad::NodeId pool_W, pool_b, enc_W, enc_b;
  };
  std::vector<Level> levels;
  ad::NodeId Wf, bf;
};

inline MobGcnBinding bind(ad::Tape& tape, const MobGcnModel& m, bool trainable = true) {
  auto reg = [&](const Matrix& v) { return trainable ? tape.parameter(v) : tape.constant(v); };
  MobGcnBinding b;
  b.Wb = reg(m.Wb);
  b.bb = reg(m.bb);
  for (const auto& lv : m.levels)
    b.levels.push_back({reg(lv.pool_W), reg(lv.pool_b), reg(lv.enc_W), reg(lv.enc_b)});
  b.Wf = reg(m.Wf);
  b.bf = reg(m.bf);
  return b;
}

inline ad::NodeId mobgcn_forward(ad::Tape& tape, ad::NodeId X, const Matrix& a_dense,
                                 const MobGcnModel& m, const MobGcnBinding& b, ForwardMode mode,
                                 std::mt19937_64& rng) {
  std::size_t n_cur = tape.value(X).rows();
  for (std::size_t r : m.resolutions) {
    if (r > n_cur) throw ConfigError("mobgcn_forward: resolution exceeds node count");
    n_cur = r;
  }

  const ad::NodeId ahat = tape.constant(normalized_adjacency(a_dense));
  ad::NodeId L = tape.relu(tape.add_rowvec(tape.matmul(tape.matmul(ahat, X), b.Wb), b.bb));

  std::vector<ad::NodeId> all_latents{L};
  ad::NodeId A = tape.constant(a_dense);
  ad::NodeId product = 0;
  bool have_product = false;

  for (std::size_t lvl = 0; lvl < m.levels.size(); ++lvl) {
    const auto& lb = b.levels[lvl];
    const ad::NodeId pool_logits = tape.add_rowvec(tape.matmul(L, lb.pool_W), lb.pool_b);
    const ad::NodeId assign = gumbel_softmax(tape, pool_logits, m.tau, mode, rng);
    product = have_product ? tape.matmul(product, assign) : assign;
    have_product = true;

    auto [xp, ap] = coarsen(tape, assign, L, A);
    A = ap;
    L = tape.relu(tape.add_rowvec(tape.matmul(tape.matmul(ap, xp), lb.enc_W), lb.enc_b));
    all_latents.push_back(tape.matmul(product, L));
  }

  if (m.use_norm)
    for (ad::NodeId& lat : all_latents) lat = tape.row_l2_normalize(lat);

  const ad::NodeId rep = tape.concat_cols(all_latents);
  return tape.add_rowvec(tape.matmul(rep, b.Wf), b.bf);
}

/// Eval-mode logits without keeping the tape around.
inline Matrix mobgcn_logits(const MobGcnModel& m, const Matrix& X, const Matrix& a_dense) {
  ad::Tape tape;
  std::mt19937_64 rng(0);
  MobGcnBinding b = bind(tape, m, /*trainable=*/false);
  const ad::NodeId out =
      mobgcn_forward(tape, tape.constant(X), a_dense, m, b, ForwardMode::Eval, rng);
  return tape.value(out);
}

inline Matrix gcn_logits(const GcnBaseline& m, const Matrix& X, const Matrix& a_dense) {
  ad::Tape tape;
  GcnBinding b = bind(tape, m, /*trainable=*/false);
  const ad::NodeId ahat = tape.constant(normalized_adjacency(a_dense));
  const ad::NodeId out = gcn_forward(tape, tape.constant(X), ahat, b);
  return tape.value(out);
}

}  // namespace mobgcn
