#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "mobgcn/errors.hpp"
#include "mobgcn/hsi.hpp"
#include "mobgcn/matrix.hpp"
#include "mobgcn/segmentation.hpp"

namespace mobgcn {

struct SuperpixelFeatures {
  std::size_t n = 0;
  std::size_t d = 0;
  Matrix mean;                            // n x d
  Matrix weighted;                        // n x d
  Matrix centroid;                        // n x 2, (row, col) pixel coordinates
  std::vector<std::set<int>> adjacency;   // 4-connectivity neighbor ids
  double h = 15.0;
};

struct SeedLabels {
  std::size_t n = 0;
  int c = 0;
  Matrix Y;                      // n x c, one-hot or zero rows
  std::vector<bool> train_mask;  // true iff row non-zero
};

/// 4-connectivity superpixel adjacency.
inline std::vector<std::set<int>> compute_adjacency(const Segmentation& seg) {
  std::vector<std::set<int>> adj(seg.n);
  for (std::size_t r = 0; r < seg.height; ++r) {
    for (std::size_t c = 0; c < seg.width; ++c) {
      const int id = seg.at(r, c);
      if (c + 1 < seg.width) {
        const int right = seg.at(r, c + 1);
        if (right != id) {
          adj[id].insert(right);
          adj[right].insert(id);
        }
      }
      if (r + 1 < seg.height) {
        const int down = seg.at(r + 1, c);
        if (down != id) {
          adj[id].insert(down);
          adj[down].insert(id);
        }
      }
    }
  }
  return adj;
}

inline Matrix compute_mean(const Segmentation& seg, const ReducedCube& reduced) {
  if (seg.height != reduced.height || seg.width != reduced.width)
    throw ShapeError("compute_mean: segmentation/cube dims mismatch");
  Matrix mean(seg.n, reduced.dims);
  for (std::size_t p = 0; p < seg.segment_id.size(); ++p) {
    const int id = seg.segment_id[p];
    for (std::size_t k = 0; k < reduced.dims; ++k)
      mean(id, k) += reduced.values[p * reduced.dims + k];
  }
  for (std::size_t i = 0; i < seg.n; ++i)
    for (std::size_t k = 0; k < reduced.dims; ++k)
      mean(i, k) /= static_cast<double>(seg.sizes[i]);
  return mean;
}

/// Softmax-weighted combination of neighbor means; isolated superpixels
/// copy their own mean.
inline Matrix compute_weighted(const Matrix& mean, const std::vector<std::set<int>>& adjacency,
                               double h = 15.0) {
  const std::size_t n = mean.rows(), d = mean.cols();
  Matrix weighted(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = adjacency[i];
    if (nb.empty()) {
      for (std::size_t k = 0; k < d; ++k) weighted(i, k) = mean(i, k);
      continue;
    }
    std::vector<double> logw;
    logw.reserve(nb.size());
    double maxlog = -1e300;
    for (int z : nb) {
      double dist = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = mean(z, k) - mean(i, k);
        dist += diff * diff;
      }
      logw.push_back(-dist / h);
      maxlog = std::max(maxlog, logw.back());
    }
    double denom = 0.0;
    for (double& lw : logw) {
      lw = std::exp(lw - maxlog);
      denom += lw;
    }
    std::size_t idx = 0;
    for (int z : nb) {
      const double w = logw[idx++] / denom;
      for (std::size_t k = 0; k < d; ++k) weighted(i, k) += w * mean(z, k);
    }
  }
  return weighted;
}

inline Matrix compute_centroids(const Segmentation& seg) {
  Matrix cen(seg.n, 2);
  for (std::size_t r = 0; r < seg.height; ++r)
    for (std::size_t c = 0; c < seg.width; ++c) {
      const int id = seg.at(r, c);
      cen(id, 0) += static_cast<double>(r);
      cen(id, 1) += static_cast<double>(c);
    }
  for (std::size_t i = 0; i < seg.n; ++i) {
    cen(i, 0) /= static_cast<double>(seg.sizes[i]);
    cen(i, 1) /= static_cast<double>(seg.sizes[i]);
  }
  return cen;
}

inline SuperpixelFeatures compute_features(const Segmentation& seg, const ReducedCube& reduced,
                                           double h = 15.0) {
  SuperpixelFeatures f;
  f.n = seg.n;
  f.d = reduced.dims;
  f.h = h;
  f.adjacency = compute_adjacency(seg);
  f.mean = compute_mean(seg, reduced);
  f.weighted = compute_weighted(f.mean, f.adjacency, h);
  f.centroid = compute_centroids(seg);
  return f;
}

/// Majority label of the sampled pixels inside each superpixel (ties go to
/// the smallest class id); superpixels with no sampled pixel get a zero row.
inline SeedLabels seed_labels(const Segmentation& seg, const GroundTruth& gt,
                              const std::vector<bool>& sampled_pixel_mask) {
  if (seg.height != gt.height || seg.width != gt.width)
    throw ShapeError("seed_labels: segmentation/gt dims mismatch");
  SeedLabels out;
  out.n = seg.n;
  out.c = gt.class_count;
  out.Y = Matrix(seg.n, static_cast<std::size_t>(std::max(gt.class_count, 1)));
  out.train_mask.assign(seg.n, false);

  std::vector<std::map<int, int>> counts(seg.n);
  for (std::size_t p = 0; p < seg.segment_id.size(); ++p) {
    if (!sampled_pixel_mask[p]) continue;
    const int cls = gt.labels[p];
    if (cls <= 0) continue;
    ++counts[static_cast<std::size_t>(seg.segment_id[p])][cls];
  }
  for (std::size_t i = 0; i < seg.n; ++i) {
    if (counts[i].empty()) continue;
    int best_cls = 0, best_cnt = -1;
    for (const auto& [cls, cnt] : counts[i]) {
      if (cnt > best_cnt) {  // map iterates ascending, ties keep the smaller id
        best_cnt = cnt;
        best_cls = cls;
      }
    }
    out.Y(i, static_cast<std::size_t>(best_cls - 1)) = 1.0;
    out.train_mask[i] = true;
  }
  return out;
}

}  // namespace mobgcn
