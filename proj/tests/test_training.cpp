#include <doctest.h>

#include <random>

#include "mobgcn/training.hpp"

using namespace mobgcn;

namespace {

GroundTruth make_gt(std::size_t H, std::size_t W, std::vector<int> labels) {
  GroundTruth gt;
  gt.height = H;
  gt.width = W;
  gt.labels = std::move(labels);
  gt.class_count = 0;
  for (int l : gt.labels) gt.class_count = std::max(gt.class_count, l);
  return gt;
}

SpatialGraph ring_graph(std::size_t n, double w = 1.0) {
  SpatialGraph g;
  g.n = n;
  g.dense = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    g.edges.push_back({std::min(i, j), std::max(i, j)});
    g.weights.push_back(w);
    g.dense(i, j) = w;
    g.dense(j, i) = w;
  }
  return g;
}

}  // namespace

TEST_CASE("sample_training_pixels") {
  SUBCASE("per-class ceiling counts") {
    // class 1: 10 pixels, class 2: 3 pixels, class 0 (unlabeled): 3 pixels
    std::vector<int> labels(16, 0);
    for (std::size_t i = 0; i < 10; ++i) labels[i] = 1;
    for (std::size_t i = 10; i < 13; ++i) labels[i] = 2;
    GroundTruth gt = make_gt(4, 4, labels);
    SplitSpec split{0.1, 7, true};
    std::vector<bool> mask = sample_training_pixels(gt, split);
    std::size_t c1 = 0, c2 = 0, c0 = 0;
    for (std::size_t p = 0; p < 16; ++p) {
      if (!mask[p]) continue;
      if (labels[p] == 1) ++c1;
      if (labels[p] == 2) ++c2;
      if (labels[p] == 0) ++c0;
    }
    CHECK(c1 == 1);  // ceil(0.1 * 10)
    CHECK(c2 == 1);  // ceil(0.1 * 3)
    CHECK(c0 == 0);  // unlabeled pixels never sampled
  }
  SUBCASE("fraction 1.0 takes every labeled pixel") {
    GroundTruth gt = make_gt(1, 6, {1, 0, 2, 2, 1, 0});
    std::vector<bool> mask = sample_training_pixels(gt, SplitSpec{1.0, 3, true});
    for (std::size_t p = 0; p < 6; ++p) CHECK(mask[p] == (gt.labels[p] > 0));
  }
  SUBCASE("deterministic per seed, different across seeds") {
    std::vector<int> labels(100);
    for (std::size_t i = 0; i < 100; ++i) labels[i] = 1 + int(i % 4);
    GroundTruth gt = make_gt(10, 10, labels);
    auto a = sample_training_pixels(gt, SplitSpec{0.3, 5, true});
    auto b = sample_training_pixels(gt, SplitSpec{0.3, 5, true});
    auto c = sample_training_pixels(gt, SplitSpec{0.3, 6, true});
    CHECK(a == b);
    CHECK(a != c);
  }
  SUBCASE("test mask is the labeled complement") {
    GroundTruth gt = make_gt(1, 5, {1, 0, 2, 1, 2});
    std::vector<bool> train = {true, false, false, true, false};
    std::vector<bool> test = test_pixel_mask(gt, train);
    CHECK(test == std::vector<bool>{false, false, true, false, true});
  }
}

TEST_CASE("lgc_loss supervised term") {
  SUBCASE("uniform logits give log(c) cross-entropy, smoothness off") {
    const std::size_t n = 4, c = 3;
    SpatialGraph g = ring_graph(n);
    Matrix Y(n, c);
    Y(0, 1) = 1.0;
    Y(2, 0) = 1.0;
    std::vector<bool> mask = {true, false, true, false};
    ad::Tape t;
    auto loss = lgc_loss(t, t.constant(Matrix(n, c)), g, Y, mask, 0.0);
    CHECK(t.value(loss)(0, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  }
  SUBCASE("constant predictions have zero smoothness on a regular graph") {
    const std::size_t n = 6, c = 2;
    SpatialGraph g = ring_graph(n, 0.7);
    Matrix Y(n, c);
    Y(0, 0) = 1.0;
    std::vector<bool> mask(n, false);
    mask[0] = true;
    Matrix logits(n, c);
    for (std::size_t i = 0; i < n; ++i) logits(i, 1) = 2.5;  // same row everywhere

    ad::Tape t0, t1;
    auto l0 = lgc_loss(t0, t0.constant(logits), g, Y, mask, 0.0);
    auto l1 = lgc_loss(t1, t1.constant(logits), g, Y, mask, 0.01);
    CHECK(t1.value(l1)(0, 0) == doctest::Approx(t0.value(l0)(0, 0)).epsilon(1e-12));
  }
}

TEST_CASE("lgc_loss smoothness term hand-evaluated on a 4-node path") {
  // path 0-1-2-3, unit weights; degrees 1,2,2,1
  SpatialGraph g;
  g.n = 4;
  g.dense = Matrix(4, 4);
  for (std::size_t i = 0; i < 3; ++i) {
    g.edges.push_back({i, i + 1});
    g.weights.push_back(1.0);
    g.dense(i, i + 1) = 1.0;
    g.dense(i + 1, i) = 1.0;
  }
  Matrix logits{{1.0, 0.0}, {0.0, 0.5}, {0.2, 0.2}, {-1.0, 1.0}};
  Matrix Y(4, 2);
  Y(0, 0) = 1.0;
  std::vector<bool> mask = {true, false, false, false};
  const double mu = 0.05;

  // reference computed with plain scalar arithmetic
  double deg[4] = {1, 2, 2, 1};
  double yhat[4][2];
  for (int i = 0; i < 4; ++i) {
    const double a = std::exp(logits(std::size_t(i), 0)), b = std::exp(logits(std::size_t(i), 1));
    yhat[i][0] = a / (a + b);
    yhat[i][1] = b / (a + b);
  }
  double smooth = 0;
  for (int e = 0; e < 3; ++e) {
    for (int k = 0; k < 2; ++k) {
      const double diff = yhat[e][k] / std::sqrt(deg[e]) - yhat[e + 1][k] / std::sqrt(deg[e + 1]);
      smooth += diff * diff;
    }
  }
  smooth /= 3.0;
  const double expected = -std::log(yhat[0][0]) + mu * smooth;

  ad::Tape t;
  auto loss = lgc_loss(t, t.constant(logits), g, Y, mask, mu);
  CHECK(t.value(loss)(0, 0) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("lgc_loss gradient matches finite differences") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1);
  SpatialGraph g = ring_graph(5, 0.8);
  Matrix logits0(5, 3);
  for (double& v : logits0.raw()) v = u(rng);
  Matrix Y(5, 3);
  Y(0, 2) = 1.0;
  Y(3, 1) = 1.0;
  std::vector<bool> mask = {true, false, false, true, false};
  const double mu = 0.1;

  auto eval = [&](const Matrix& lg) {
    ad::Tape t;
    return t.value(lgc_loss(t, t.constant(lg), g, Y, mask, mu))(0, 0);
  };
  ad::Tape t;
  auto lg = t.parameter(logits0);
  t.backward(lgc_loss(t, lg, g, Y, mask, mu));
  const Matrix& an = t.grad(lg);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < logits0.size(); ++i) {
    Matrix p = logits0, m = logits0;
    p.raw()[i] += eps;
    m.raw()[i] -= eps;
    const double fd = (eval(p) - eval(m)) / (2 * eps);
    CHECK(std::abs(fd - an.raw()[i]) < 1e-6 + 1e-4 * std::abs(fd));
  }
}

TEST_CASE("lgc_objective_weighted basic behavior") {
  SpatialGraph g = ring_graph(4);
  Matrix Y(4, 2);
  Y(0, 0) = 1.0;
  // identical rows on a regular graph: only the fitting term survives
  Matrix flat(4, 2);
  const double q = lgc_objective_weighted(flat, g, Y, 1.0);
  CHECK(q == doctest::Approx(0.5 * (-std::log(0.5))).epsilon(1e-9));
  // non-negative in general
  Matrix logits{{2.0, -1.0}, {0.0, 0.0}, {-3.0, 1.0}, {0.5, 0.5}};
  CHECK(lgc_objective_weighted(logits, g, Y, 0.3) >= 0.0);
}

namespace {

struct Toy {
  SpatialGraph graph;
  Matrix X;
  SeedLabels seeds;
  Segmentation seg;
  GroundTruth gt;
};

// two feature clusters, edges mostly within clusters
Toy two_cluster_toy() {
  Toy toy;
  const std::size_t n = 8;
  toy.graph.n = n;
  toy.graph.dense = Matrix(n, n);
  auto link = [&](std::size_t i, std::size_t j, double w) {
    toy.graph.edges.push_back({std::min(i, j), std::max(i, j)});
    toy.graph.weights.push_back(w);
    toy.graph.dense(i, j) = w;
    toy.graph.dense(j, i) = w;
  };
  for (std::size_t i = 0; i < 3; ++i) {
    link(i, i + 1, 1.0);
    link(i + 4, i + 5, 1.0);
  }
  link(3, 4, 0.05);

  toy.X = Matrix(n, 2);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (std::size_t i = 0; i < n; ++i) {
    toy.X(i, 0) = (i < 4 ? 1.0 : -1.0) + jitter(rng);
    toy.X(i, 1) = (i < 4 ? -1.0 : 1.0) + jitter(rng);
  }

  toy.seeds.n = n;
  toy.seeds.c = 2;
  toy.seeds.Y = Matrix(n, 2);
  toy.seeds.train_mask.assign(n, false);
  toy.seeds.Y(0, 0) = 1.0;
  toy.seeds.train_mask[0] = true;
  toy.seeds.Y(7, 1) = 1.0;
  toy.seeds.train_mask[7] = true;

  // one pixel per node so node predictions are pixel predictions
  toy.seg.height = 1;
  toy.seg.width = n;
  toy.seg.n = n;
  toy.seg.segment_id.resize(n);
  for (std::size_t i = 0; i < n; ++i) toy.seg.segment_id[i] = int(i);
  toy.seg.sizes.assign(n, 1);
  toy.gt.height = 1;
  toy.gt.width = n;
  toy.gt.class_count = 2;
  toy.gt.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) toy.gt.labels[i] = i < 4 ? 1 : 2;
  return toy;
}

}  // namespace

TEST_CASE("gcn training drives the loss down and labels the clusters") {
  Toy toy = two_cluster_toy();
  std::mt19937_64 rng(4);
  GcnBaseline model = GcnBaseline::init(2, 8, 2, rng);
  TrainConfig cfg{0.01, 150, 0.01, 4};
  std::vector<double> trace = train(model, toy.graph, toy.X, toy.seeds, cfg);
  REQUIRE(trace.size() == 150);
  CHECK(trace.back() < 0.25 * trace.front());

  std::vector<int> pred = predict_pixels(gcn_logits(model, toy.X, toy.graph.dense), toy.seg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 8; ++i)
    if (pred[i] == toy.gt.labels[i]) ++correct;
  CHECK(correct == 8);
}

TEST_CASE("mobgcn training converges on the toy problem") {
  Toy toy = two_cluster_toy();
  std::mt19937_64 rng(4);
  MobGcnModel model = MobGcnModel::init(2, 8, 2, {4, 2}, rng);
  TrainConfig cfg{0.01, 150, 0.01, 4};
  std::vector<double> trace = train(model, toy.graph, toy.X, toy.seeds, cfg);
  REQUIRE(trace.size() == 150);
  CHECK(trace.back() < 0.5 * trace.front());

  std::vector<int> pred = predict_pixels(mobgcn_logits(model, toy.X, toy.graph.dense), toy.seg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 8; ++i)
    if (pred[i] == toy.gt.labels[i]) ++correct;
  CHECK(correct >= 7);
}

TEST_CASE("training is reproducible and zero epochs is a no-op") {
  Toy toy = two_cluster_toy();
  std::mt19937_64 r1(11), r2(11);
  GcnBaseline a = GcnBaseline::init(2, 6, 2, r1);
  GcnBaseline b = GcnBaseline::init(2, 6, 2, r2);
  TrainConfig cfg{0.01, 30, 0.01, 2};
  auto ta = train(a, toy.graph, toy.X, toy.seeds, cfg);
  auto tb = train(b, toy.graph, toy.X, toy.seeds, cfg);
  CHECK(ta == tb);
  CHECK(a.W1.raw() == b.W1.raw());

  GcnBaseline before = a;
  TrainConfig none{0.01, 0, 0.01, 2};
  auto tr = train(a, toy.graph, toy.X, toy.seeds, none);
  CHECK(tr.empty());
  CHECK(a.W1.raw() == before.W1.raw());
}

TEST_CASE("predict_pixels argmax, tie break, and broadcast") {
  Segmentation seg;
  seg.height = 1;
  seg.width = 4;
  seg.n = 2;
  seg.segment_id = {0, 0, 1, 0};
  seg.sizes = {3, 1};

  Matrix logits{{0.2, 0.9, 0.1}, {0.7, 0.7, 0.3}};
  std::vector<int> pred = predict_pixels(logits, seg);
  CHECK(pred == std::vector<int>{2, 2, 1, 2});  // node 1 ties -> smallest class id 1

  Matrix bad(3, 3);
  CHECK_THROWS_AS(predict_pixels(bad, seg), ShapeError);
}
