#include <doctest.h>

#include "mobgcn/metrics.hpp"

using namespace mobgcn;

namespace {

GroundTruth make_gt(std::vector<int> labels, int classes) {
  GroundTruth gt;
  gt.height = 1;
  gt.width = labels.size();
  gt.labels = std::move(labels);
  gt.class_count = classes;
  return gt;
}

}  // namespace

TEST_CASE("perfect prediction scores 100 everywhere") {
  GroundTruth gt = make_gt({1, 2, 1, 2, 3, 3}, 3);
  std::vector<bool> test(6, true);
  MetricsReport rep = compute_metrics(gt.labels, gt, test);
  CHECK(rep.oa == doctest::Approx(100.0));
  CHECK(rep.aa == doctest::Approx(100.0));
  CHECK(rep.kappa == doctest::Approx(100.0));
  for (double r : rep.per_class) CHECK(r == doctest::Approx(100.0));
}

TEST_CASE("constant predictor on a balanced two-class set") {
  GroundTruth gt = make_gt({1, 1, 2, 2}, 2);
  std::vector<bool> test(4, true);
  std::vector<int> pred(4, 1);
  MetricsReport rep = compute_metrics(pred, gt, test);
  CHECK(rep.oa == doctest::Approx(50.0));
  CHECK(rep.aa == doctest::Approx(50.0));
  // po = pe = 0.5 for the all-ones predictor: no skill
  CHECK(rep.kappa == doctest::Approx(0.0));
  CHECK(rep.per_class[0] == doctest::Approx(100.0));
  CHECK(rep.per_class[1] == doctest::Approx(0.0));
}

TEST_CASE("hand-computed confusion, po and pe") {
  // truth:      1 1 1 2 2 2 2 2
  // prediction: 1 1 2 2 2 2 1 1
  GroundTruth gt = make_gt({1, 1, 1, 2, 2, 2, 2, 2}, 2);
  std::vector<int> pred = {1, 1, 2, 2, 2, 2, 1, 1};
  std::vector<bool> test(8, true);
  MetricsReport rep = compute_metrics(pred, gt, test);

  CHECK(rep.confusion[0][0] == 2);
  CHECK(rep.confusion[0][1] == 1);
  CHECK(rep.confusion[1][0] == 2);
  CHECK(rep.confusion[1][1] == 3);

  const double po = 5.0 / 8.0;
  const double pe = (3.0 * 4.0 + 5.0 * 4.0) / 64.0;
  CHECK(rep.oa == doctest::Approx(100.0 * po));
  CHECK(rep.aa == doctest::Approx(100.0 * (2.0 / 3.0 + 3.0 / 5.0) / 2.0));
  CHECK(rep.kappa == doctest::Approx(100.0 * (po - pe) / (1.0 - pe)));
}

TEST_CASE("only test-mask pixels are scored") {
  GroundTruth gt = make_gt({1, 1, 2, 2, 0}, 2);
  std::vector<int> pred = {1, 2, 2, 1, 1};  // wrong on pixels 1 and 3
  std::vector<bool> test = {true, false, true, false, true};  // pixel 4 unlabeled
  MetricsReport rep = compute_metrics(pred, gt, test);
  CHECK(rep.oa == doctest::Approx(100.0));  // the two masked-in labeled pixels are correct
  CHECK(rep.confusion[0][0] + rep.confusion[0][1] + rep.confusion[1][0] + rep.confusion[1][1] ==
        2);
}

TEST_CASE("class absent from the test set reports recall -1 and is skipped in AA") {
  GroundTruth gt = make_gt({1, 1, 3, 3}, 3);
  std::vector<int> pred = {1, 1, 3, 1};
  std::vector<bool> test(4, true);
  MetricsReport rep = compute_metrics(pred, gt, test);
  CHECK(rep.per_class[1] == -1.0);
  CHECK(rep.aa == doctest::Approx((100.0 + 50.0) / 2.0));
}

TEST_CASE("degenerate inputs") {
  GroundTruth gt = make_gt({1, 2}, 2);
  SUBCASE("empty test set") {
    std::vector<bool> none(2, false);
    CHECK_THROWS_AS(compute_metrics({1, 2}, gt, none), ContractError);
  }
  SUBCASE("size mismatch") {
    std::vector<bool> test(2, true);
    CHECK_THROWS_AS(compute_metrics({1}, gt, test), ShapeError);
  }
}

TEST_CASE("summarize mean and population std") {
  MetricsReport a, b;
  a.oa = 90.0;
  a.aa = 80.0;
  a.kappa = 70.0;
  b.oa = 94.0;
  b.aa = 84.0;
  b.kappa = 78.0;
  MetricsSummary s = summarize({a, b});
  CHECK(s.oa_mean == doctest::Approx(92.0));
  CHECK(s.oa_std == doctest::Approx(2.0));
  CHECK(s.aa_mean == doctest::Approx(82.0));
  CHECK(s.kappa_mean == doctest::Approx(74.0));
  CHECK(s.kappa_std == doctest::Approx(4.0));

  MetricsSummary single = summarize({a});
  CHECK(single.oa_mean == doctest::Approx(90.0));
  CHECK(single.oa_std == doctest::Approx(0.0));
}
