#pragma once

// Test-only reference implementations, kept deliberately naive and
// independent of the library's data structures.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "mobgcn/hsi.hpp"

namespace oracles {

struct Edge {
  std::size_t a, b;
  double w;
  std::size_t index;
};

// 8-connected grid edges over per-pixel feature vectors, Euclidean weights,
// emitted in the same construction order the library uses.
inline std::vector<Edge> grid_edges(const std::vector<std::vector<double>>& feat, std::size_t H,
                                    std::size_t W) {
  std::vector<Edge> edges;
  const int dr[4] = {0, 1, 1, 1};
  const int dc[4] = {1, 0, 1, -1};
  std::size_t idx = 0;
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      for (int k = 0; k < 4; ++k) {
        const long nr = long(r) + dr[k], nc = long(c) + dc[k];
        if (nr < 0 || nr >= long(H) || nc < 0 || nc >= long(W)) continue;
        const std::size_t p = r * W + c, q = std::size_t(nr) * W + std::size_t(nc);
        double s = 0;
        for (std::size_t d = 0; d < feat[p].size(); ++d) {
          const double diff = feat[p][d] - feat[q][d];
          s += diff * diff;
        }
        edges.push_back({p, q, std::sqrt(s), idx++});
      }
  return edges;
}

// Literal reading of the merge rule: components held as explicit pixel
// sets, thresholds recomputed from scratch at every step.
inline std::vector<int> felzenszwalb_brute(const std::vector<std::vector<double>>& feat,
                                           std::size_t H, std::size_t W, double k,
                                           std::size_t min_size) {
  std::vector<Edge> edges = grid_edges(feat, H, W);
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return x.w < y.w;
  });

  const std::size_t N = H * W;
  std::vector<std::set<std::size_t>> comps(N);
  std::vector<int> comp_of(N);
  std::vector<double> internal(N, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    comps[p].insert(p);
    comp_of[p] = int(p);
  }

  auto merge = [&](int ca, int cb, double w) {
    for (std::size_t p : comps[std::size_t(cb)]) {
      comps[std::size_t(ca)].insert(p);
      comp_of[p] = ca;
    }
    comps[std::size_t(cb)].clear();
    internal[std::size_t(ca)] = std::max({internal[std::size_t(ca)], internal[std::size_t(cb)], w});
  };

  for (const Edge& e : edges) {
    const int ca = comp_of[e.a], cb = comp_of[e.b];
    if (ca == cb) continue;
    const double ta = internal[std::size_t(ca)] + k / double(comps[std::size_t(ca)].size());
    const double tb = internal[std::size_t(cb)] + k / double(comps[std::size_t(cb)].size());
    if (e.w <= std::min(ta, tb)) merge(ca, cb, e.w);
  }

  // repeatedly merge across the globally lowest-weight edge that touches
  // an undersized component
  if (min_size > 1) {
    for (;;) {
      const Edge* best = nullptr;
      for (const Edge& e : edges) {
        const int ca = comp_of[e.a], cb = comp_of[e.b];
        if (ca == cb) continue;
        if (comps[std::size_t(ca)].size() >= min_size && comps[std::size_t(cb)].size() >= min_size)
          continue;
        if (!best || e.w < best->w || (e.w == best->w && e.index < best->index)) best = &e;
      }
      if (!best) break;
      merge(comp_of[best->a], comp_of[best->b], best->w);
    }
  }

  // contiguous ids in row-major first-occurrence order
  std::vector<int> relabel(N, -1), out(N);
  int next = 0;
  for (std::size_t p = 0; p < N; ++p) {
    const int c = comp_of[p];
    if (relabel[std::size_t(c)] < 0) relabel[std::size_t(c)] = next++;
    out[p] = relabel[std::size_t(c)];
  }
  return out;
}

// Plain ReducedCube wrapper so the library side sees the same features.
inline mobgcn::ReducedCube to_reduced(const std::vector<std::vector<double>>& feat, std::size_t H,
                                      std::size_t W) {
  mobgcn::ReducedCube rc;
  rc.height = H;
  rc.width = W;
  rc.dims = feat.empty() ? 0 : feat[0].size();
  rc.values.resize(H * W * rc.dims);
  for (std::size_t p = 0; p < H * W; ++p)
    for (std::size_t d = 0; d < rc.dims; ++d) rc.values[p * rc.dims + d] = feat[p][d];
  return rc;
}

}  // namespace oracles
