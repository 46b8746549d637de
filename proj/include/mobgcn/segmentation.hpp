#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mobgcn/errors.hpp"
#include "mobgcn/hsi.hpp"

namespace mobgcn {

struct Segmentation {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<int> segment_id;  // row-major, ids 0..n-1
  std::size_t n = 0;
  std::vector<std::size_t> sizes;

  int at(std::size_t r, std::size_t c) const { return segment_id[r * width + c]; }
};

struct SegmentationParams {
  double scale_k = 0.0;        // <=0 means "derive from the image" (3x median edge weight)
  std::size_t min_size = 1;
  double smoothing_sigma = 0.8;
};

namespace detail {

struct GridEdge {
  std::uint32_t a, b;
  double w;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.0) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // merges b's root under a's root; internal weight becomes w
  void merge(std::uint32_t a, std::uint32_t b, double w) {
    a = find(a);
    b = find(b);
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    internal_[a] = w;
  }
  std::size_t size(std::uint32_t x) { return size_[find(x)]; }
  double internal(std::uint32_t x) { return internal_[find(x)]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<double> internal_;
};

/// Per-dimension separable Gaussian blur of the reduced feature planes.
inline std::vector<double> smooth_features(const ReducedCube& rc, double sigma) {
  const std::size_t H = rc.height, W = rc.width, D = rc.dims;
  if (sigma <= 0.0) return rc.values;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    ksum += kernel[i + radius];
  }
  for (double& k : kernel) k /= ksum;

  std::vector<double> tmp(rc.values.size()), out(rc.values.size());
  // horizontal
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      for (std::size_t d = 0; d < D; ++d) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          long cc = std::clamp<long>(static_cast<long>(c) + i, 0, static_cast<long>(W) - 1);
          s += kernel[i + radius] * rc.values[(r * W + cc) * D + d];
        }
        tmp[(r * W + c) * D + d] = s;
      }
  // vertical
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      for (std::size_t d = 0; d < D; ++d) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          long rr = std::clamp<long>(static_cast<long>(r) + i, 0, static_cast<long>(H) - 1);
          s += kernel[i + radius] * tmp[(rr * W + c) * D + d];
        }
        out[(r * W + c) * D + d] = s;
      }
  return out;
}

inline std::vector<GridEdge> grid_edges_8(const std::vector<double>& feat, std::size_t H,
                                          std::size_t W, std::size_t D) {
  std::vector<GridEdge> edges;
  edges.reserve(4 * H * W);
  auto dist = [&](std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double diff = feat[p * D + d] - feat[q * D + d];
      s += diff * diff;
    }
    return std::sqrt(s);
  };
  // right, down, down-right, down-left — each undirected pair emitted once
  const int dr[4] = {0, 1, 1, 1};
  const int dc[4] = {1, 0, 1, -1};
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      for (int k = 0; k < 4; ++k) {
        const long nr = static_cast<long>(r) + dr[k];
        const long nc = static_cast<long>(c) + dc[k];
        if (nr < 0 || nr >= static_cast<long>(H) || nc < 0 || nc >= static_cast<long>(W))
          continue;
        const std::uint32_t p = static_cast<std::uint32_t>(r * W + c);
        const std::uint32_t q = static_cast<std::uint32_t>(nr * W + nc);
        edges.push_back({p, q, dist(p, q)});
      }
  return edges;
}

}  // namespace detail

inline double median_edge_weight(std::vector<double> ws) {
  if (ws.empty()) return 0.0;
  std::sort(ws.begin(), ws.end());
  const std::size_t m = ws.size() / 2;
  return ws.size() % 2 ? ws[m] : 0.5 * (ws[m - 1] + ws[m]);
}

inline Segmentation felzenszwalb_segment(const ReducedCube& reduced,
                                         const SegmentationParams& params) {
  const std::size_t H = reduced.height, W = reduced.width, D = reduced.dims;
  const std::size_t N = H * W;

  std::vector<double> feat = detail::smooth_features(reduced, params.smoothing_sigma);
  std::vector<detail::GridEdge> edges = detail::grid_edges_8(feat, H, W, D);

  double k = params.scale_k;
  if (k <= 0.0) {
    std::vector<double> ws(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) ws[i] = edges[i].w;
    k = 3.0 * median_edge_weight(std::move(ws));
    if (k <= 0.0) k = 1.0;
  }

  // ascending weight, construction-index tie-break (stable sort)
  std::stable_sort(edges.begin(), edges.end(),
                   [](const detail::GridEdge& a, const detail::GridEdge& b) { return a.w < b.w; });

  detail::UnionFind uf(N);
  for (const auto& e : edges) {
    const std::uint32_t ra = uf.find(e.a);
    const std::uint32_t rb = uf.find(e.b);
    if (ra == rb) continue;
    const double ta = uf.internal(ra) + k / static_cast<double>(uf.size(ra));
    const double tb = uf.internal(rb) + k / static_cast<double>(uf.size(rb));
    if (e.w <= std::min(ta, tb)) uf.merge(ra, rb, e.w);
  }

  // undersized components join through their lowest-weight incident edge;
  // the ascending scan guarantees that edge is seen first
  if (params.min_size > 1) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& e : edges) {
        const std::uint32_t ra = uf.find(e.a);
        const std::uint32_t rb = uf.find(e.b);
        if (ra == rb) continue;
        if (uf.size(ra) < params.min_size || uf.size(rb) < params.min_size) {
          uf.merge(ra, rb, e.w);
          changed = true;
        }
      }
    }
  }

  Segmentation seg;
  seg.height = H;
  seg.width = W;
  seg.segment_id.assign(N, -1);
  std::vector<int> root_to_id(N, -1);
  int next = 0;
  for (std::size_t p = 0; p < N; ++p) {
    const std::uint32_t r = uf.find(static_cast<std::uint32_t>(p));
    if (root_to_id[r] < 0) root_to_id[r] = next++;
    seg.segment_id[p] = root_to_id[r];
  }
  seg.n = static_cast<std::size_t>(next);
  seg.sizes.assign(seg.n, 0);
  for (int id : seg.segment_id) ++seg.sizes[static_cast<std::size_t>(id)];
  return seg;
}

inline std::size_t target_min_size(std::size_t height, std::size_t width,
                                   std::size_t target_nodes) {
  if (target_nodes < 1) throw ConfigError("target_min_size: target_nodes must be >= 1");
  return (height * width + target_nodes - 1) / target_nodes;
}

}  // namespace mobgcn
