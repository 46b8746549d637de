#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "mobgcn/errors.hpp"
#include "mobgcn/matrix.hpp"

namespace mobgcn {

struct KmeansResult {
  std::vector<int> assignment;
  Matrix centers;
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; empty clusters reseed to the
/// point farthest from its center.
inline KmeansResult kmeans(const Matrix& features, std::size_t k, std::uint64_t seed,
                           std::size_t max_iters = 100, double tol = 1e-6) {
  const std::size_t n = features.rows(), d = features.cols();
  if (k < 1 || k > n) throw ConfigError("kmeans: k out of range");
  std::mt19937_64 rng(seed);

  auto dist2 = [&](std::size_t p, const Matrix& centers, std::size_t c) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = features(p, j) - centers(c, j);
      s += diff * diff;
    }
    return s;
  };

  // k-means++ seeding
  Matrix centers(k, d);
  {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t first = pick(rng);
    for (std::size_t j = 0; j < d; ++j) centers(0, j) = features(first, j);
    std::vector<double> mind(n, std::numeric_limits<double>::max());
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        mind[p] = std::min(mind[p], dist2(p, centers, c - 1));
        total += mind[p];
      }
      std::size_t chosen = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng), acc = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
          acc += mind[p];
          if (acc >= target) {
            chosen = p;
            break;
          }
        }
      } else {
        chosen = pick(rng);
      }
      for (std::size_t j = 0; j < d; ++j) centers(c, j) = features(chosen, j);
    }
  }

  KmeansResult res;
  res.assignment.assign(n, 0);
  double prev_inertia = std::numeric_limits<double>::max();
  for (std::size_t it = 0; it < max_iters; ++it) {
    double inertia = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double best = std::numeric_limits<double>::max();
      int bestc = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d2 = dist2(p, centers, c);
        if (d2 < best) {
          best = d2;
          bestc = static_cast<int>(c);
        }
      }
      res.assignment[p] = bestc;
      inertia += best;
    }

    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t c = static_cast<std::size_t>(res.assignment[p]);
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums(c, j) += features(p, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
      } else {
        // reseed empty cluster to the farthest point from its center
        std::size_t far = 0;
        double fard = -1.0;
        for (std::size_t p = 0; p < n; ++p) {
          const double d2 = dist2(p, centers, static_cast<std::size_t>(res.assignment[p]));
          if (d2 > fard) {
            fard = d2;
            far = p;
          }
        }
        for (std::size_t j = 0; j < d; ++j) centers(c, j) = features(far, j);
      }
    }

    res.inertia = inertia;
    if (prev_inertia < std::numeric_limits<double>::max()) {
      const double rel = std::abs(prev_inertia - inertia) / std::max(prev_inertia, 1e-30);
      if (rel < tol) break;
    }
    prev_inertia = inertia;
  }
  res.centers = centers;
  return res;
}

struct CvStatistics {
  std::vector<double> per_cluster;  // CV_p, population std averaged over dims
  double average = 0.0;             // CV_avg over clusters
};

/// Per-cluster spread: population standard deviation per dimension,
/// averaged over dimensions, then averaged over clusters.
inline CvStatistics cv_statistics(const Matrix& features, const std::vector<int>& assignment,
                                  bool normalize_by_mean = false) {
  const std::size_t n = features.rows(), d = features.cols();
  if (assignment.size() != n) throw ShapeError("cv_statistics: assignment size mismatch");
  int k = 0;
  for (int a : assignment) k = std::max(k, a + 1);

  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  Matrix mu(static_cast<std::size_t>(k), d);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t c = static_cast<std::size_t>(assignment[p]);
    ++counts[c];
    for (std::size_t j = 0; j < d; ++j) mu(c, j) += features(p, j);
  }
  for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
    if (counts[c] == 0) throw ContractError("cv_statistics: empty cluster");
    for (std::size_t j = 0; j < d; ++j) mu(c, j) /= static_cast<double>(counts[c]);
  }

  Matrix var(static_cast<std::size_t>(k), d);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t c = static_cast<std::size_t>(assignment[p]);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = features(p, j) - mu(c, j);
      var(c, j) += diff * diff;
    }
  }

  CvStatistics stats;
  stats.per_cluster.resize(static_cast<std::size_t>(k));
  for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
    double cv = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double s = std::sqrt(var(c, j) / static_cast<double>(counts[c]));
      if (normalize_by_mean) s /= std::max(std::abs(mu(c, j)), 1e-12);
      cv += s;
    }
    stats.per_cluster[c] = cv / static_cast<double>(d);
    stats.average += stats.per_cluster[c];
  }
  stats.average /= static_cast<double>(k);
  return stats;
}

namespace detail {

struct IsoNode {
  double split = 0.0;
  int left = -1, right = -1;  // -1 marks a leaf
  std::size_t size = 0;
};

inline double iso_c(double psi) {
  if (psi <= 1.0) return 0.0;
  if (psi == 2.0) return 1.0;
  const double h = std::log(psi - 1.0) + 0.5772156649015329;
  return 2.0 * h - 2.0 * (psi - 1.0) / psi;
}

inline int iso_build(std::vector<IsoNode>& nodes, std::vector<double> vals, int depth,
                     int max_depth, std::mt19937_64& rng) {
  IsoNode node;
  node.size = vals.size();
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  if (vals.size() <= 1 || depth >= max_depth || *lo == *hi) {
    nodes.push_back(node);
    return static_cast<int>(nodes.size()) - 1;
  }
  std::uniform_real_distribution<double> u(*lo, *hi);
  node.split = u(rng);
  std::vector<double> lvals, rvals;
  for (double v : vals)
    (v < node.split ? lvals : rvals).push_back(v);
  const int self = static_cast<int>(nodes.size());
  nodes.push_back(node);
  nodes[self].left = iso_build(nodes, std::move(lvals), depth + 1, max_depth, rng);
  nodes[self].right = iso_build(nodes, std::move(rvals), depth + 1, max_depth, rng);
  return self;
}

inline double iso_path(const std::vector<IsoNode>& nodes, int root, double x) {
  double depth = 0.0;
  int cur = root;
  while (nodes[cur].left >= 0) {
    cur = x < nodes[cur].split ? nodes[cur].left : nodes[cur].right;
    depth += 1.0;
  }
  return depth + iso_c(static_cast<double>(nodes[cur].size));
}

}  // namespace detail

struct IsolationForestResult {
  std::vector<double> scores;  // anomaly score in (0,1)
  std::vector<bool> inlier;
};

/// 1-D isolation forest over the per-segment CV values; the top
/// ceil(contamination * P) scores are outliers.
inline IsolationForestResult isolation_forest(const std::vector<double>& values,
                                              std::size_t trees = 100, std::size_t subsample = 256,
                                              double contamination = 0.05,
                                              std::uint64_t seed = 0) {
  const std::size_t P = values.size();
  if (P < 2) throw ContractError("isolation_forest: need at least 2 values");
  IsolationForestResult res;
  res.inlier.assign(P, true);
  res.scores.assign(P, 0.0);

  const bool all_same = std::all_of(values.begin(), values.end(),
                                    [&](double v) { return v == values.front(); });
  if (all_same || contamination <= 0.0) return res;

  const std::size_t psi = std::min(subsample, P);
  const int max_depth = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi)))) + 1;
  std::mt19937_64 rng(seed);

  std::vector<double> avg_path(P, 0.0);
  std::vector<std::size_t> idx(P);
  for (std::size_t i = 0; i < P; ++i) idx[i] = i;
  for (std::size_t t = 0; t < trees; ++t) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> sample(psi);
    for (std::size_t i = 0; i < psi; ++i) sample[i] = values[idx[i]];
    std::vector<detail::IsoNode> nodes;
    const int root = detail::iso_build(nodes, std::move(sample), 0, max_depth, rng);
    for (std::size_t i = 0; i < P; ++i) avg_path[i] += detail::iso_path(nodes, root, values[i]);
  }
  const double cpsi = detail::iso_c(static_cast<double>(psi));
  for (std::size_t i = 0; i < P; ++i) {
    const double eh = avg_path[i] / static_cast<double>(trees);
    res.scores[i] = std::pow(2.0, -eh / std::max(cpsi, 1e-12));
  }

  const std::size_t n_out = std::min(
      P, static_cast<std::size_t>(std::ceil(contamination * static_cast<double>(P))));
  std::vector<std::size_t> order(P);
  for (std::size_t i = 0; i < P; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return res.scores[a] > res.scores[b]; });
  for (std::size_t i = 0; i < n_out; ++i) res.inlier[order[i]] = false;
  return res;
}

struct ScaleProfile {
  std::vector<std::size_t> scales;     // ascending cluster counts
  std::vector<double> cv_avg;          // inlier-filtered CV_avg per scale
  std::vector<std::size_t> inlier_count;  // P after outlier removal
  std::vector<double> nn_ncv;          // min-max normalized across scales
  std::vector<double> nn_nroc;         // 0 for the first scale (no predecessor)
};

/// Fills NN-nCV (min-max across the scale axis, floored at 1e-12) and
/// NN-nRoC = |relative change| / P for every scale with a predecessor.
inline void nn_nroc(ScaleProfile& profile) {
  const std::size_t m = profile.scales.size();
  if (m < 2) throw ContractError("nn_nroc: need at least 2 candidate scales");
  double lo = *std::min_element(profile.cv_avg.begin(), profile.cv_avg.end());
  double hi = *std::max_element(profile.cv_avg.begin(), profile.cv_avg.end());
  profile.nn_ncv.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = hi > lo ? (profile.cv_avg[i] - lo) / (hi - lo) : 0.0;
    profile.nn_ncv[i] = std::max(v, 1e-12);
  }
  profile.nn_nroc.assign(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    const double prev = profile.nn_ncv[i - 1];
    if (prev <= 0.0) continue;  // undefined predecessor, term skipped
    profile.nn_nroc[i] = std::abs((profile.nn_ncv[i] - prev) / prev) /
                         static_cast<double>(profile.inlier_count[i]);
  }
}

/// Builds the full profile: one K-means run per candidate scale, CV stats,
/// isolation-forest pruning, then the NN curves.
inline ScaleProfile build_scale_profile(const Matrix& features,
                                        const std::vector<std::size_t>& candidate_scales,
                                        std::uint64_t seed, double contamination = 0.05) {
  ScaleProfile profile;
  for (std::size_t k : candidate_scales) {
    if (k < 2 || k > features.rows()) continue;
    const KmeansResult km = kmeans(features, k, seed + k);
    const CvStatistics cv = cv_statistics(features, km.assignment);
    double avg = cv.average;
    std::size_t inliers = cv.per_cluster.size();
    if (cv.per_cluster.size() >= 2) {
      const IsolationForestResult iso =
          isolation_forest(cv.per_cluster, 100, std::min<std::size_t>(cv.per_cluster.size(), 256),
                           contamination, seed + k);
      double s = 0.0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < cv.per_cluster.size(); ++i)
        if (iso.inlier[i]) {
          s += cv.per_cluster[i];
          ++cnt;
        }
      if (cnt > 0) {
        avg = s / static_cast<double>(cnt);
        inliers = cnt;
      }
    }
    profile.scales.push_back(k);
    profile.cv_avg.push_back(avg);
    profile.inlier_count.push_back(inliers);
  }
  nn_nroc(profile);
  return profile;
}

struct OptimalScales {
  std::vector<std::pair<std::size_t, double>> peaks;  // (scale, value), value descending
  std::vector<std::size_t> selected;                  // top-m scales, descending by scale
};

/// Local maxima of the NN-nRoC curve ranked by value; top-m become the
/// resolution list, reported largest scale first.
inline OptimalScales select_optimal_scales(const ScaleProfile& profile, std::size_t m = 5) {
  const std::size_t count = profile.scales.size();
  OptimalScales out;
  // first index has no defined NN-nRoC, start at 1
  for (std::size_t i = 1; i < count; ++i) {
    const double v = profile.nn_nroc[i];
    const double left = profile.nn_nroc[i - 1];
    // plateau: only the leftmost index of an equal run counts
    std::size_t j = i;
    while (j + 1 < count && profile.nn_nroc[j + 1] == v) ++j;
    const bool rises = i == 1 || v > left;
    const bool falls = j + 1 >= count || profile.nn_nroc[j + 1] < v;
    if (rises && falls && v > 0.0) out.peaks.emplace_back(profile.scales[i], v);
  }
  std::stable_sort(out.peaks.begin(), out.peaks.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t take = std::min(m, out.peaks.size());
  for (std::size_t i = 0; i < take; ++i) out.selected.push_back(out.peaks[i].first);
  std::sort(out.selected.rbegin(), out.selected.rend());
  return out;
}

}  // namespace mobgcn
