#include <doctest.h>

#include <random>

#include "mobgcn/segmentation.hpp"
#include "oracles.hpp"

using namespace mobgcn;

namespace {

ReducedCube constant_image(std::size_t H, std::size_t W, double v) {
  ReducedCube rc;
  rc.height = H;
  rc.width = W;
  rc.dims = 1;
  rc.values.assign(H * W, v);
  return rc;
}

std::vector<std::vector<double>> random_1d_features(std::size_t n, std::mt19937_64& rng) {
  // values spread out so that edge weights are pairwise distinct with
  // overwhelming probability
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<std::vector<double>> feat(n);
  for (auto& f : feat) f = {u(rng)};
  return feat;
}

}  // namespace

TEST_CASE("constant image collapses to a single segment") {
  SegmentationParams params{1.0, 1, 0.0};
  Segmentation seg = felzenszwalb_segment(constant_image(4, 4, 3.0), params);
  CHECK(seg.n == 1);
  CHECK(seg.sizes[0] == 16);
}

TEST_CASE("1x1 image yields one segment") {
  SegmentationParams params{1.0, 1, 0.0};
  Segmentation seg = felzenszwalb_segment(constant_image(1, 1, 0.0), params);
  CHECK(seg.n == 1);
}

TEST_CASE("4x1 strip splits at the feature jump") {
  ReducedCube rc;
  rc.height = 1;
  rc.width = 4;
  rc.dims = 1;
  rc.values = {0, 0, 10, 10};
  SegmentationParams params{0.5, 1, 0.0};
  Segmentation seg = felzenszwalb_segment(rc, params);
  CHECK(seg.n == 2);
  CHECK(seg.at(0, 0) == seg.at(0, 1));
  CHECK(seg.at(0, 2) == seg.at(0, 3));
  CHECK(seg.at(0, 0) != seg.at(0, 2));
}

TEST_CASE("matches brute-force merge-rule oracle on small 1-dim images") {
  std::mt19937_64 rng(42);
  const std::vector<std::pair<std::size_t, std::size_t>> shapes = {
      {1, 2}, {1, 3}, {1, 5}, {1, 8}, {1, 12}, {2, 3}, {2, 5}, {2, 6}, {3, 3}, {3, 4}};
  for (const auto& [H, W] : shapes) {
    for (int trial = 0; trial < 40; ++trial) {
      auto feat = random_1d_features(H * W, rng);
      for (double k : {0.5, 2.0, 10.0, 50.0}) {
        for (std::size_t min_size : {std::size_t(1), std::size_t(2), std::size_t(4)}) {
          SegmentationParams params{k, min_size, 0.0};
          Segmentation seg = felzenszwalb_segment(oracles::to_reduced(feat, H, W), params);
          std::vector<int> ref = oracles::felzenszwalb_brute(feat, H, W, k, min_size);
          REQUIRE(seg.segment_id == ref);
        }
      }
    }
  }
}

TEST_CASE("partition and min-size invariants on fuzz images") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> dim(1, 10);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t H = dim(rng), W = dim(rng);
    auto feat = random_1d_features(H * W, rng);
    std::uniform_real_distribution<double> kdist(0.1, 80.0);
    std::uniform_int_distribution<std::size_t> mdist(1, std::max<std::size_t>(1, H * W / 2));
    SegmentationParams params{kdist(rng), mdist(rng), 0.0};
    Segmentation seg = felzenszwalb_segment(oracles::to_reduced(feat, H, W), params);

    // every pixel assigned, ids contiguous, sizes consistent
    std::vector<std::size_t> counts(seg.n, 0);
    for (int id : seg.segment_id) {
      REQUIRE(id >= 0);
      REQUIRE(std::size_t(id) < seg.n);
      ++counts[std::size_t(id)];
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < seg.n; ++i) {
      REQUIRE(counts[i] == seg.sizes[i]);
      REQUIRE(counts[i] > 0);
      total += counts[i];
      if (seg.n > 1) REQUIRE(counts[i] >= params.min_size);
    }
    REQUIRE(total == H * W);
  }
}

TEST_CASE("determinism: identical inputs give identical segmentations") {
  std::mt19937_64 rng(11);
  auto feat = random_1d_features(30, rng);
  SegmentationParams params{3.0, 2, 0.8};
  Segmentation a = felzenszwalb_segment(oracles::to_reduced(feat, 5, 6), params);
  Segmentation b = felzenszwalb_segment(oracles::to_reduced(feat, 5, 6), params);
  CHECK(a.segment_id == b.segment_id);
}

TEST_CASE("increasing min_size never increases segment count") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto feat = random_1d_features(48, rng);
    std::size_t prev = SIZE_MAX;
    for (std::size_t min_size : {std::size_t(1), std::size_t(2), std::size_t(4), std::size_t(8)}) {
      SegmentationParams params{1.0, min_size, 0.0};
      Segmentation seg = felzenszwalb_segment(oracles::to_reduced(feat, 6, 8), params);
      CHECK(seg.n <= prev);
      prev = seg.n;
    }
  }
}

TEST_CASE("target_min_size arithmetic") {
  CHECK(target_min_size(145, 145, 668) == 32);
  CHECK(target_min_size(100, 100, 1) == 10000);
  CHECK(target_min_size(512, 217, 1000) == 112);
  CHECK_THROWS_AS(target_min_size(4, 4, 0), ConfigError);
}
