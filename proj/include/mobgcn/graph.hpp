#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "mobgcn/errors.hpp"
#include "mobgcn/features.hpp"
#include "mobgcn/matrix.hpp"

namespace mobgcn {

struct GraphParams {
  double beta = 0.9;
  double sigma_s = 0.20;
  double sigma_l = 0.20;
  std::size_t k = 8;
  double centroid_scale = 0.0;  // max(height,width); 0 = leave centroids as-is
};

struct SpatialGraph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j
  std::vector<double> weights;                             // parallel to edges
  Matrix dense;                                            // n x n symmetric, zero diagonal
};

/// Eq-style pairwise similarity: a feature kernel blending mean/weighted
/// distances and a location kernel over normalized centroids.
inline double pair_weight(std::size_t i, std::size_t j, const SuperpixelFeatures& feats,
                          const GraphParams& params) {
  double dw = 0.0, dm = 0.0;
  for (std::size_t k = 0; k < feats.d; ++k) {
    const double a = feats.weighted(i, k) - feats.weighted(j, k);
    const double b = feats.mean(i, k) - feats.mean(j, k);
    dw += a * a;
    dm += b * b;
  }
  const double s =
      std::exp(((params.beta - 1.0) * dw - params.beta * dm) / (params.sigma_s * params.sigma_s));

  const double scale = params.centroid_scale > 0 ? params.centroid_scale : 1.0;
  double dl = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const double diff = (feats.centroid(i, k) - feats.centroid(j, k)) / scale;
    dl += diff * diff;
  }
  const double l = std::exp(-dl / (params.sigma_l * params.sigma_l));
  return s * l;
}

/// Symmetric-union kNN graph over all pairwise weights; "nearest" means
/// largest weight, ties at the K boundary prefer the smaller node id.
inline SpatialGraph build_knn_graph(const SuperpixelFeatures& feats, const GraphParams& params) {
  const std::size_t n = feats.n;
  if (n < 2) throw DegenerateGraphError("build_knn_graph: need at least 2 nodes");

  Matrix W(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = pair_weight(i, j, feats, params);
      W(i, j) = w;
      W(j, i) = w;
    }

  // per-node top-K neighbor sets
  std::vector<std::vector<std::size_t>> topk(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::size_t> order;
    order.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i)
      if (i != j) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (W(a, j) != W(b, j)) return W(a, j) > W(b, j);
      return a < b;
    });
    const std::size_t kk = std::min(params.k, order.size());
    topk[j].assign(order.begin(), order.begin() + static_cast<long>(kk));
  }

  std::vector<std::vector<bool>> keep(n, std::vector<bool>(n, false));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i : topk[j]) {
      keep[i][j] = true;
      keep[j][i] = true;
    }

  SpatialGraph g;
  g.n = n;
  g.dense = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (keep[i][j]) {
        g.edges.emplace_back(i, j);
        g.weights.push_back(W(i, j));
        g.dense(i, j) = W(i, j);
        g.dense(j, i) = W(i, j);
      }
  return g;
}

}  // namespace mobgcn
