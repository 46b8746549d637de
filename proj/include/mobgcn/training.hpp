#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "mobgcn/autodiff.hpp"
#include "mobgcn/errors.hpp"
#include "mobgcn/features.hpp"
#include "mobgcn/graph.hpp"
#include "mobgcn/model.hpp"

namespace mobgcn {

struct SplitSpec {
  double fraction = 0.05;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct TrainConfig {
  double mu = 0.01;
  std::size_t epochs = 300;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

/// Per class, ceil(fraction * count) labeled pixels chosen without
/// replacement; unlabeled pixels never enter either side of the split.
inline std::vector<bool> sample_training_pixels(const GroundTruth& gt, const SplitSpec& split) {
  std::vector<bool> mask(gt.labels.size(), false);
  std::mt19937_64 rng(split.seed);
  for (int cls = 1; cls <= gt.class_count; ++cls) {
    std::vector<std::size_t> pix;
    for (std::size_t p = 0; p < gt.labels.size(); ++p)
      if (gt.labels[p] == cls) pix.push_back(p);
    if (pix.empty()) continue;
    const std::size_t want = std::min(
        pix.size(),
        static_cast<std::size_t>(std::ceil(split.fraction * static_cast<double>(pix.size()))));
    std::shuffle(pix.begin(), pix.end(), rng);
    for (std::size_t i = 0; i < want; ++i) mask[pix[i]] = true;
  }
  return mask;
}

inline std::vector<bool> test_pixel_mask(const GroundTruth& gt, const std::vector<bool>& train) {
  std::vector<bool> mask(gt.labels.size(), false);
  for (std::size_t p = 0; p < gt.labels.size(); ++p)
    mask[p] = gt.labels[p] > 0 && !train[p];
  return mask;
}

/// Supervised cross-entropy over seeded nodes plus mu-weighted graph
/// smoothness of degree-normalized predictions, averaged over edges.
inline ad::NodeId lgc_loss(ad::Tape& tape, ad::NodeId logits, const SpatialGraph& graph,
                           const Matrix& Y, const std::vector<bool>& train_mask, double mu) {
  const std::size_t n = tape.value(logits).rows();
  if (Y.rows() != n) throw ShapeError("lgc_loss: Y row mismatch");

  const ad::NodeId yhat = tape.row_softmax(logits);

  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < train_mask.size(); ++i)
    if (train_mask[i]) train_rows.push_back(i);
  if (train_rows.empty()) {
    train_rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) train_rows[i] = i;
  }

  Matrix y_sub(train_rows.size(), Y.cols());
  for (std::size_t i = 0; i < train_rows.size(); ++i)
    for (std::size_t j = 0; j < Y.cols(); ++j) y_sub(i, j) = Y(train_rows[i], j);

  const ad::NodeId logp = tape.log(tape.gather_rows(yhat, train_rows));
  const ad::NodeId ce = tape.elementwise_mul(tape.constant(std::move(y_sub)), logp);
  ad::NodeId loss = tape.scalar_mul(tape.sum(ce), -1.0 / static_cast<double>(train_rows.size()));

  if (mu > 0.0 && !graph.edges.empty()) {
    std::vector<double> dinvsqrt(graph.n);
    for (std::size_t i = 0; i < graph.n; ++i) {
      double deg = 0.0;
      for (std::size_t j = 0; j < graph.n; ++j) deg += graph.dense(i, j);
      dinvsqrt[i] = 1.0 / std::sqrt(deg > 1e-12 ? deg : 1e-12);
    }
    Matrix dm(graph.n, graph.n);
    for (std::size_t i = 0; i < graph.n; ++i) dm(i, i) = dinvsqrt[i];
    const ad::NodeId ynorm = tape.matmul(tape.constant(std::move(dm)), yhat);

    std::vector<std::size_t> src, dst;
    src.reserve(graph.edges.size());
    dst.reserve(graph.edges.size());
    for (const auto& [i, j] : graph.edges) {
      src.push_back(i);
      dst.push_back(j);
    }
    const ad::NodeId diff = tape.add(tape.gather_rows(ynorm, src),
                                     tape.scalar_mul(tape.gather_rows(ynorm, dst), -1.0));
    const ad::NodeId sq = tape.elementwise_mul(diff, diff);
    const ad::NodeId smooth =
        tape.scalar_mul(tape.sum(sq), 1.0 / static_cast<double>(graph.edges.size()));
    loss = tape.add(loss, tape.scalar_mul(smooth, mu));
  }
  return loss;
}

/// Diagnostic: the weighted pairwise smoothness objective evaluated on
/// softmaxed predictions (not the training loss).
inline double lgc_objective_weighted(const Matrix& logits, const SpatialGraph& graph,
                                     const Matrix& Y, double mu) {
  const std::size_t n = logits.rows(), c = logits.cols();
  Matrix f(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -1e300;
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, logits(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      f(i, j) = std::exp(logits(i, j) - mx);
      denom += f(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) f(i, j) /= denom;
  }
  std::vector<double> dinvsqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += graph.dense(i, j);
    dinvsqrt[i] = deg > 1e-12 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (graph.dense(i, j) == 0.0) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        const double diff = f(i, k) * dinvsqrt[i] - f(j, k) * dinvsqrt[j];
        d2 += diff * diff;
      }
      q += 0.5 * graph.dense(i, j) * d2;
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < c; ++k)
      if (Y(i, k) > 0) q += 0.5 * mu * (-Y(i, k) * std::log(std::max(f(i, k), 1e-12)));
  return q;
}

namespace detail {

template <typename ForwardFn, typename ParamsFn>
std::vector<double> train_loop(ForwardFn&& forward, ParamsFn&& get_params,
                               const SpatialGraph& graph, const Matrix& Y,
                               const std::vector<bool>& train_mask, const TrainConfig& cfg) {
  std::vector<double> trace;
  trace.reserve(cfg.epochs);
  ad::AdamState adam;
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    ad::Tape tape;
    const ad::NodeId logits = forward(tape, rng);
    const ad::NodeId loss = lgc_loss(tape, logits, graph, Y, train_mask, cfg.mu);
    const double lv = tape.value(loss)(0, 0);
    if (!std::isfinite(lv))
      throw DataError("train: loss diverged to non-finite at epoch " + std::to_string(epoch));
    trace.push_back(lv);

    std::vector<Matrix> grads = ad::gradient(tape, loss);
    std::vector<Matrix*> ps = get_params();
    std::vector<Matrix> pv;
    pv.reserve(ps.size());
    for (Matrix* p : ps) pv.push_back(*p);
    ad::adam_step(pv, grads, adam, cfg.lr);
    for (std::size_t i = 0; i < ps.size(); ++i) *ps[i] = std::move(pv[i]);
  }
  return trace;
}

}  // namespace detail

inline std::vector<double> train(GcnBaseline& model, const SpatialGraph& graph, const Matrix& X,
                                 const SeedLabels& seeds, const TrainConfig& cfg) {
  const Matrix ahat = normalized_adjacency(graph.dense);
  return detail::train_loop(
      [&](ad::Tape& tape, std::mt19937_64&) {
        const GcnBinding b = bind(tape, model);
        return gcn_forward(tape, tape.constant(X), tape.constant(ahat), b);
      },
      [&]() { return model.params(); }, graph, seeds.Y, seeds.train_mask, cfg);
}

inline std::vector<double> train(MobGcnModel& model, const SpatialGraph& graph, const Matrix& X,
                                 const SeedLabels& seeds, const TrainConfig& cfg) {
  return detail::train_loop(
      [&](ad::Tape& tape, std::mt19937_64& rng) {
        const MobGcnBinding b = bind(tape, model);
        return mobgcn_forward(tape, tape.constant(X), graph.dense, model, b, ForwardMode::Train,
                              rng);
      },
      [&]() { return model.params(); }, graph, seeds.Y, seeds.train_mask, cfg);
}

/// Per-node argmax (ties to the smallest class id), broadcast to pixels.
inline std::vector<int> predict_pixels(const Matrix& logits, const Segmentation& seg) {
  if (logits.rows() != seg.n) throw ShapeError("predict_pixels: logits/segment count mismatch");
  std::vector<int> node_class(seg.n);
  for (std::size_t i = 0; i < seg.n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    node_class[i] = static_cast<int>(best) + 1;
  }
  std::vector<int> out(seg.segment_id.size());
  for (std::size_t p = 0; p < out.size(); ++p)
    out[p] = node_class[static_cast<std::size_t>(seg.segment_id[p])];
  return out;
}

}  // namespace mobgcn
