#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobgcn/errors.hpp"
#include "mobgcn/npy.hpp"

namespace mobgcn {

/// Raw hyperspectral cube, H x W x B, band-interleaved-by-pixel in memory.
struct HsiCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bands = 0;
  std::vector<float> values;  // index (r, c, b) = (r*width + c)*bands + b

  float at(std::size_t r, std::size_t c, std::size_t b) const {
    return values[(r * width + c) * bands + b];
  }
  float& at(std::size_t r, std::size_t c, std::size_t b) {
    return values[(r * width + c) * bands + b];
  }
  std::size_t pixel_count() const { return height * width; }
};

struct GroundTruth {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<int> labels;  // 0 = unlabeled, 1..class_count
  int class_count = 0;

  int at(std::size_t r, std::size_t c) const { return labels[r * width + c]; }
};

/// PCA-reduced cube; values are H x W x d scores.
struct ReducedCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t dims = 0;
  std::vector<double> values;  // (r*width + c)*dims + k
  double explained_variance_ratio = 0.0;

  double at(std::size_t r, std::size_t c, std::size_t k) const {
    return values[(r * width + c) * dims + k];
  }
  double& at(std::size_t r, std::size_t c, std::size_t k) {
    return values[(r * width + c) * dims + k];
  }
  std::size_t pixel_count() const { return height * width; }
};

enum class CubeFormat { Npy3d, RawBsq };
enum class GtFormat { Npy2d, Csv };

namespace detail {

inline void check_finite(const std::vector<float>& v, const std::string& what) {
  for (float x : v)
    if (!std::isfinite(x)) throw DataError(what + ": non-finite value");
}

}  // namespace detail

inline HsiCube load_cube(const std::string& path, CubeFormat format) {
  HsiCube cube;
  if (format == CubeFormat::Npy3d) {
    npy::Array arr = npy::load(path);
    if (arr.shape.size() != 3) throw FormatError("load_cube: expected 3-D array");
    cube.height = arr.shape[0];
    cube.width = arr.shape[1];
    cube.bands = arr.shape[2];
    cube.values.assign(arr.values.begin(), arr.values.end());
  } else {
    // band-sequential float32 LE, dims from a JSON sidecar
    std::ifstream hdr(path + ".json");
    if (!hdr) throw FormatError("load_cube: missing sidecar " + path + ".json");
    nlohmann::json j;
    try {
      hdr >> j;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("load_cube: bad sidecar: ") + e.what());
    }
    if (!j.contains("height") || !j.contains("width") || !j.contains("bands"))
      throw FormatError("load_cube: sidecar must declare height/width/bands");
    const long long h = j["height"].get<long long>();
    const long long w = j["width"].get<long long>();
    const long long b = j["bands"].get<long long>();
    if (h <= 0 || w <= 0 || b <= 0) throw FormatError("load_cube: non-positive dims");
    cube.height = static_cast<std::size_t>(h);
    cube.width = static_cast<std::size_t>(w);
    cube.bands = static_cast<std::size_t>(b);

    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_cube: cannot open " + path);
    const std::size_t n = cube.height * cube.width * cube.bands;
    std::vector<float> bsq(n);
    in.read(reinterpret_cast<char*>(bsq.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
      throw DataError("load_cube: payload size mismatch");
    // BSQ -> BIP
    cube.values.resize(n);
    for (std::size_t band = 0; band < cube.bands; ++band)
      for (std::size_t p = 0; p < cube.pixel_count(); ++p)
        cube.values[p * cube.bands + band] = bsq[band * cube.pixel_count() + p];
  }
  if (cube.height == 0 || cube.width == 0 || cube.bands == 0)
    throw FormatError("load_cube: empty cube");
  if (cube.values.size() != cube.height * cube.width * cube.bands)
    throw DataError("load_cube: size mismatch");
  detail::check_finite(cube.values, "load_cube");
  return cube;
}

inline void save_cube(const std::string& path, const HsiCube& cube) {
  npy::save_f32(path, {cube.height, cube.width, cube.bands}, cube.values);
}

inline GroundTruth load_ground_truth(const std::string& path, GtFormat format) {
  GroundTruth gt;
  if (format == GtFormat::Npy2d) {
    npy::Array arr = npy::load(path);
    if (arr.shape.size() != 2) throw FormatError("load_ground_truth: expected 2-D array");
    gt.height = arr.shape[0];
    gt.width = arr.shape[1];
    gt.labels.reserve(arr.values.size());
    for (double v : arr.values) {
      if (v < 0) throw DataError("load_ground_truth: negative label");
      gt.labels.push_back(static_cast<int>(std::llround(v)));
    }
  } else {
    std::ifstream in(path);
    if (!in) throw FormatError("load_ground_truth: cannot open " + path);
    std::string line;
    std::size_t cols = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string tok;
      std::size_t row_cols = 0;
      while (std::getline(ss, tok, ',')) {
        long v;
        try {
          v = std::stol(tok);
        } catch (const std::exception&) {
          throw FormatError("load_ground_truth: bad integer '" + tok + "'");
        }
        if (v < 0) throw DataError("load_ground_truth: negative label");
        gt.labels.push_back(static_cast<int>(v));
        ++row_cols;
      }
      if (cols == 0) cols = row_cols;
      else if (row_cols != cols) throw FormatError("load_ground_truth: ragged csv");
      ++gt.height;
    }
    gt.width = cols;
  }
  gt.class_count = 0;
  for (int v : gt.labels) gt.class_count = std::max(gt.class_count, v);
  return gt;
}

inline void save_ground_truth(const std::string& path, const GroundTruth& gt) {
  std::vector<std::int32_t> vals(gt.labels.begin(), gt.labels.end());
  npy::save_i32(path, {gt.height, gt.width}, vals);
}

/// Affinely maps each band to [0,1]; constant bands become all-zero.
inline HsiCube normalize_bands(const HsiCube& cube) {
  HsiCube out = cube;
  for (std::size_t b = 0; b < cube.bands; ++b) {
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (std::size_t p = 0; p < cube.pixel_count(); ++p) {
      const float v = cube.values[p * cube.bands + b];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const float range = hi - lo;
    for (std::size_t p = 0; p < cube.pixel_count(); ++p) {
      float& v = out.values[p * cube.bands + b];
      v = range > 0 ? (v - lo) / range : 0.0f;
    }
  }
  return out;
}

namespace detail {

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues (diagonal of the rotated matrix) with eigenvectors in the
/// columns of V.
inline void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                         std::vector<double>& v) {
  v.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  auto V = [&](std::size_t i, std::size_t j) -> double& { return v[i * n + j]; };

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(A(p, q)) < 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  eigvals.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigvals[i] = A(i, i);
}

}  // namespace detail

/// PCA loadings and spectrum, kept around so callers can inspect the fit.
struct PcaResult {
  ReducedCube reduced;
  std::vector<double> eigenvalues;           // descending, all of them
  std::vector<std::vector<double>> loadings; // kept components, each length B
};

inline PcaResult pca_reduce_full(const HsiCube& cube, double variance_target = 0.999) {
  if (cube.bands == 0) throw ShapeError("pca_reduce: no bands");
  if (!(variance_target > 0.0 && variance_target <= 1.0))
    throw ConfigError("pca_reduce: variance_target out of (0,1]");

  const std::size_t B = cube.bands;
  const std::size_t N = cube.pixel_count();

  std::vector<double> mean(B, 0.0);
  for (std::size_t p = 0; p < N; ++p)
    for (std::size_t b = 0; b < B; ++b) mean[b] += cube.values[p * B + b];
  for (double& m : mean) m /= static_cast<double>(N);

  std::vector<double> cov(B * B, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t i = 0; i < B; ++i) {
      const double di = cube.values[p * B + i] - mean[i];
      for (std::size_t j = i; j < B; ++j) {
        const double dj = cube.values[p * B + j] - mean[j];
        cov[i * B + j] += di * dj;
      }
    }
  }
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = i; j < B; ++j) {
      cov[i * B + j] /= static_cast<double>(N);
      cov[j * B + i] = cov[i * B + j];
    }

  std::vector<double> eigvals, vecs;
  detail::jacobi_eigen(cov, B, eigvals, vecs);

  std::vector<std::size_t> order(B);
  for (std::size_t i = 0; i < B; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return eigvals[a] > eigvals[b]; });

  double total = 0.0;
  for (double e : eigvals) total += std::max(e, 0.0);

  PcaResult res;
  res.reduced.height = cube.height;
  res.reduced.width = cube.width;

  if (total <= 0.0) {
    // all pixels identical: keep one all-zero dimension
    res.reduced.dims = 1;
    res.reduced.values.assign(N, 0.0);
    res.reduced.explained_variance_ratio = 1.0;
    res.eigenvalues.assign(B, 0.0);
    res.loadings.push_back(std::vector<double>(B, 0.0));
    return res;
  }

  res.eigenvalues.resize(B);
  for (std::size_t i = 0; i < B; ++i) res.eigenvalues[i] = std::max(eigvals[order[i]], 0.0);

  std::size_t d = B;
  double cum = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    cum += res.eigenvalues[i];
    if (cum / total >= variance_target) {
      d = i + 1;
      break;
    }
  }

  res.reduced.dims = d;
  res.reduced.explained_variance_ratio = 0.0;
  {
    double kept = 0.0;
    for (std::size_t i = 0; i < d; ++i) kept += res.eigenvalues[i];
    res.reduced.explained_variance_ratio = kept / total;
  }

  // deterministic sign: largest-magnitude entry of each eigenvector non-negative
  res.loadings.assign(d, std::vector<double>(B));
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t col = order[k];
    double best = 0.0;
    std::size_t besti = 0;
    for (std::size_t i = 0; i < B; ++i) {
      const double v = vecs[i * B + col];
      if (std::abs(v) > std::abs(best)) {
        best = v;
        besti = i;
      }
    }
    const double sign = vecs[besti * B + col] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < B; ++i) res.loadings[k][i] = sign * vecs[i * B + col];
  }

  res.reduced.values.assign(N * d, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        s += (cube.values[p * B + b] - mean[b]) * res.loadings[k][b];
      res.reduced.values[p * d + k] = s;
    }
  }
  return res;
}

inline ReducedCube pca_reduce(const HsiCube& cube, double variance_target = 0.999) {
  return pca_reduce_full(cube, variance_target).reduced;
}

}  // namespace mobgcn
