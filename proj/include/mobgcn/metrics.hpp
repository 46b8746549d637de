#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mobgcn/errors.hpp"
#include "mobgcn/hsi.hpp"

namespace mobgcn {

struct MetricsReport {
  double oa = 0.0;     // percent
  double aa = 0.0;     // percent
  double kappa = 0.0;  // percent
  std::vector<std::vector<long>> confusion;  // c x c, rows = truth, cols = prediction
  std::vector<double> per_class;             // recall percent; -1 when class absent from test
};

/// OA/AA/Kappa over test pixels only (labeled, not used for training).
inline MetricsReport compute_metrics(const std::vector<int>& pred, const GroundTruth& gt,
                                     const std::vector<bool>& test_mask) {
  const std::size_t npix = gt.labels.size();
  if (pred.size() != npix || test_mask.size() != npix)
    throw ShapeError("compute_metrics: size mismatch");
  const int c = gt.class_count;
  MetricsReport rep;
  rep.confusion.assign(static_cast<std::size_t>(c), std::vector<long>(static_cast<std::size_t>(c), 0));

  long total = 0;
  for (std::size_t p = 0; p < npix; ++p) {
    if (!test_mask[p]) continue;
    const int truth = gt.labels[p];
    if (truth <= 0) continue;
    const int guess = pred[p];
    if (guess >= 1 && guess <= c) {
      ++rep.confusion[static_cast<std::size_t>(truth - 1)][static_cast<std::size_t>(guess - 1)];
    }
    ++total;
  }
  if (total == 0) throw ContractError("compute_metrics: empty test set");

  long diag = 0;
  std::vector<long> row_sum(static_cast<std::size_t>(c), 0), col_sum(static_cast<std::size_t>(c), 0);
  long counted = 0;
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      const long v = rep.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      row_sum[static_cast<std::size_t>(i)] += v;
      col_sum[static_cast<std::size_t>(j)] += v;
      counted += v;
      if (i == j) diag += v;
    }

  // predictions outside 1..c count against OA but not the confusion table
  rep.oa = 100.0 * static_cast<double>(diag) / static_cast<double>(total);

  rep.per_class.assign(static_cast<std::size_t>(c), -1.0);
  double recall_sum = 0.0;
  int present = 0;
  for (int i = 0; i < c; ++i) {
    if (row_sum[static_cast<std::size_t>(i)] == 0) continue;  // class absent from test set
    const double r = 100.0 *
                     static_cast<double>(rep.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]) /
                     static_cast<double>(row_sum[static_cast<std::size_t>(i)]);
    rep.per_class[static_cast<std::size_t>(i)] = r;
    recall_sum += r;
    ++present;
  }
  rep.aa = present ? recall_sum / present : 0.0;

  const double n = static_cast<double>(counted);
  if (n > 0) {
    const double po = static_cast<double>(diag) / n;
    double pe = 0.0;
    for (int i = 0; i < c; ++i)
      pe += static_cast<double>(row_sum[static_cast<std::size_t>(i)]) *
            static_cast<double>(col_sum[static_cast<std::size_t>(i)]) / (n * n);
    rep.kappa = pe < 1.0 ? 100.0 * (po - pe) / (1.0 - pe) : 100.0;
  }
  return rep;
}

struct MetricsSummary {
  double oa_mean = 0, oa_std = 0;
  double aa_mean = 0, aa_std = 0;
  double kappa_mean = 0, kappa_std = 0;
};

inline MetricsSummary summarize(const std::vector<MetricsReport>& runs) {
  MetricsSummary s;
  const double n = static_cast<double>(runs.size());
  if (runs.empty()) return s;
  for (const auto& r : runs) {
    s.oa_mean += r.oa;
    s.aa_mean += r.aa;
    s.kappa_mean += r.kappa;
  }
  s.oa_mean /= n;
  s.aa_mean /= n;
  s.kappa_mean /= n;
  for (const auto& r : runs) {
    s.oa_std += (r.oa - s.oa_mean) * (r.oa - s.oa_mean);
    s.aa_std += (r.aa - s.aa_mean) * (r.aa - s.aa_mean);
    s.kappa_std += (r.kappa - s.kappa_mean) * (r.kappa - s.kappa_mean);
  }
  s.oa_std = std::sqrt(s.oa_std / n);
  s.aa_std = std::sqrt(s.aa_std / n);
  s.kappa_std = std::sqrt(s.kappa_std / n);
  return s;
}

}  // namespace mobgcn
