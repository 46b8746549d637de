#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobgcn/errors.hpp"
#include "mobgcn/features.hpp"
#include "mobgcn/graph.hpp"
#include "mobgcn/hsi.hpp"
#include "mobgcn/image.hpp"
#include "mobgcn/metrics.hpp"
#include "mobgcn/model.hpp"
#include "mobgcn/scale_select.hpp"
#include "mobgcn/segmentation.hpp"
#include "mobgcn/training.hpp"

namespace mobgcn {

enum class ModelKind { Gcn, MobGcn };

struct PipelineConfig {
  std::string cube_path;
  std::string gt_path;
  CubeFormat cube_format = CubeFormat::Npy3d;
  GtFormat gt_format = GtFormat::Npy2d;

  SegmentationParams segmentation;  // scale_k <= 0 derives 3x median edge weight
  double feature_h = 15.0;
  GraphParams graph;

  ModelKind model_kind = ModelKind::MobGcn;
  std::size_t hidden = 32;
  std::vector<std::size_t> resolutions;  // empty = "auto" via scale selection
  bool resolutions_auto = false;
  double tau = 1.0;
  bool use_norm = true;

  double train_fraction = 0.05;
  double mu = 0.01;
  double lr = 0.01;
  std::size_t epochs = 300;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;

  std::size_t scale_m = 5;
  std::size_t scale_candidate_min = 2;
  std::size_t scale_candidate_max = 100;

  std::string output_dir = "run";
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json{
      {"dataset",
       {{"cube", c.cube_path},
        {"gt", c.gt_path},
        {"cube_format", c.cube_format == CubeFormat::Npy3d ? "npy3d" : "raw_bsq"},
        {"gt_format", c.gt_format == GtFormat::Npy2d ? "npy2d" : "csv"}}},
      {"segmentation",
       {{"min_size", c.segmentation.min_size},
        {"scale_k", c.segmentation.scale_k},
        {"sigma", c.segmentation.smoothing_sigma}}},
      {"features", {{"h", c.feature_h}}},
      {"graph",
       {{"beta", c.graph.beta},
        {"sigma_s", c.graph.sigma_s},
        {"sigma_l", c.graph.sigma_l},
        {"k", c.graph.k}}},
      {"model",
       {{"kind", c.model_kind == ModelKind::Gcn ? "gcn" : "mobgcn"},
        {"hidden", c.hidden},
        {"tau", c.tau},
        {"use_norm", c.use_norm}}},
      {"training",
       {{"fraction", c.train_fraction},
        {"mu", c.mu},
        {"lr", c.lr},
        {"epochs", c.epochs},
        {"repeats", c.repeats},
        {"seed", c.seed}}},
      {"scale_select",
       {{"m", c.scale_m},
        {"candidate_min", c.scale_candidate_min},
        {"candidate_max", c.scale_candidate_max}}},
      {"output_dir", c.output_dir}};
  if (c.resolutions_auto)
    j["model"]["R"] = "auto";
  else
    j["model"]["R"] = c.resolutions;
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    c.cube_path = d.value("cube", c.cube_path);
    c.gt_path = d.value("gt", c.gt_path);
    if (d.contains("cube_format"))
      c.cube_format = d["cube_format"] == "raw_bsq" ? CubeFormat::RawBsq : CubeFormat::Npy3d;
    if (d.contains("gt_format"))
      c.gt_format = d["gt_format"] == "csv" ? GtFormat::Csv : GtFormat::Npy2d;
  }
  if (j.contains("segmentation")) {
    const auto& s = j["segmentation"];
    c.segmentation.min_size = s.value("min_size", c.segmentation.min_size);
    c.segmentation.scale_k = s.value("scale_k", c.segmentation.scale_k);
    c.segmentation.smoothing_sigma = s.value("sigma", c.segmentation.smoothing_sigma);
  }
  if (j.contains("features")) c.feature_h = j["features"].value("h", c.feature_h);
  if (j.contains("graph")) {
    const auto& g = j["graph"];
    c.graph.beta = g.value("beta", c.graph.beta);
    c.graph.sigma_s = g.value("sigma_s", c.graph.sigma_s);
    c.graph.sigma_l = g.value("sigma_l", c.graph.sigma_l);
    c.graph.k = g.value("k", c.graph.k);
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    if (m.contains("kind")) c.model_kind = m["kind"] == "gcn" ? ModelKind::Gcn : ModelKind::MobGcn;
    c.hidden = m.value("hidden", c.hidden);
    c.tau = m.value("tau", c.tau);
    c.use_norm = m.value("use_norm", c.use_norm);
    if (m.contains("R")) {
      if (m["R"].is_string() && m["R"] == "auto") {
        c.resolutions_auto = true;
        c.resolutions.clear();
      } else {
        c.resolutions_auto = false;
        c.resolutions = m["R"].get<std::vector<std::size_t>>();
      }
    }
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    c.train_fraction = t.value("fraction", c.train_fraction);
    c.mu = t.value("mu", c.mu);
    c.lr = t.value("lr", c.lr);
    c.epochs = t.value("epochs", c.epochs);
    c.repeats = t.value("repeats", c.repeats);
    c.seed = t.value("seed", c.seed);
  }
  if (j.contains("scale_select")) {
    const auto& s = j["scale_select"];
    c.scale_m = s.value("m", c.scale_m);
    c.scale_candidate_min = s.value("candidate_min", c.scale_candidate_min);
    c.scale_candidate_max = s.value("candidate_max", c.scale_candidate_max);
  }
  c.output_dir = j.value("output_dir", c.output_dir);
}

struct PipelineResult {
  Segmentation segmentation;
  SuperpixelFeatures features;
  std::vector<std::size_t> resolutions_used;
  std::optional<ScaleProfile> scale_profile;
  std::vector<MetricsReport> runs;
  MetricsSummary summary;
  std::vector<std::vector<double>> loss_traces;
  std::vector<int> last_prediction;  // pixel classes from the final repeat
};

namespace detail {

inline std::runtime_error stage_error(const std::string& stage, const std::exception& e) {
  return std::runtime_error("stage '" + stage + "' failed: " + e.what());
}

}  // namespace detail

/// Full in-memory pipeline on already-loaded data; run_pipeline() adds the
/// file IO around it.
inline PipelineResult run_pipeline_data(const HsiCube& raw_cube, const GroundTruth& gt,
                                        const PipelineConfig& cfg) {
  if (raw_cube.height != gt.height || raw_cube.width != gt.width)
    throw ShapeError("run_pipeline: cube/gt dims mismatch");

  PipelineResult result;

  HsiCube cube;
  ReducedCube reduced;
  try {
    cube = normalize_bands(raw_cube);
    reduced = pca_reduce(cube, 0.999);
  } catch (const std::exception& e) {
    throw detail::stage_error("pca", e);
  }

  try {
    result.segmentation = felzenszwalb_segment(reduced, cfg.segmentation);
  } catch (const std::exception& e) {
    throw detail::stage_error("segment", e);
  }

  try {
    result.features = compute_features(result.segmentation, reduced, cfg.feature_h);
  } catch (const std::exception& e) {
    throw detail::stage_error("features", e);
  }

  SpatialGraph graph;
  try {
    GraphParams gp = cfg.graph;
    gp.centroid_scale = static_cast<double>(std::max(cube.height, cube.width));
    graph = build_knn_graph(result.features, gp);
  } catch (const std::exception& e) {
    throw detail::stage_error("graph", e);
  }

  try {
    if (cfg.resolutions_auto) {
      std::vector<std::size_t> candidates;
      const std::size_t hi = std::min<std::size_t>(cfg.scale_candidate_max, result.features.n);
      for (std::size_t k = std::max<std::size_t>(cfg.scale_candidate_min, 2); k <= hi; ++k)
        candidates.push_back(k);
      ScaleProfile profile = build_scale_profile(result.features.mean, candidates, cfg.seed);
      OptimalScales opt = select_optimal_scales(profile, cfg.scale_m);
      result.scale_profile = std::move(profile);
      result.resolutions_used = opt.selected;
      if (result.resolutions_used.empty())
        result.resolutions_used.push_back(static_cast<std::size_t>(std::max(gt.class_count, 2)));
    } else if (!cfg.resolutions.empty()) {
      result.resolutions_used = cfg.resolutions;
    } else {
      result.resolutions_used.push_back(static_cast<std::size_t>(std::max(gt.class_count, 2)));
    }
    for (std::size_t& r : result.resolutions_used)
      r = std::min(r, result.features.n);
  } catch (const std::exception& e) {
    throw detail::stage_error("scale_select", e);
  }

  try {
    const std::size_t d = result.features.d;
    const std::size_t c = static_cast<std::size_t>(std::max(gt.class_count, 1));
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
      const std::uint64_t rep_seed = cfg.seed + rep;
      SplitSpec split{cfg.train_fraction, rep_seed, true};
      const std::vector<bool> train_pixels = sample_training_pixels(gt, split);
      const SeedLabels seeds = seed_labels(result.segmentation, gt, train_pixels);

      TrainConfig tc{cfg.mu, cfg.epochs, cfg.lr, rep_seed};
      std::mt19937_64 init_rng(rep_seed);
      Matrix logits;
      if (cfg.model_kind == ModelKind::Gcn) {
        GcnBaseline model = GcnBaseline::init(d, cfg.hidden, c, init_rng);
        result.loss_traces.push_back(train(model, graph, result.features.mean, seeds, tc));
        logits = gcn_logits(model, result.features.mean, graph.dense);
      } else {
        MobGcnModel model = MobGcnModel::init(d, cfg.hidden, c, result.resolutions_used, init_rng,
                                              cfg.tau, cfg.use_norm);
        result.loss_traces.push_back(train(model, graph, result.features.mean, seeds, tc));
        logits = mobgcn_logits(model, result.features.mean, graph.dense);
      }

      const std::vector<int> pred = predict_pixels(logits, result.segmentation);
      const std::vector<bool> test_mask = test_pixel_mask(gt, train_pixels);
      result.runs.push_back(compute_metrics(pred, gt, test_mask));
      result.last_prediction = pred;
    }
    result.summary = summarize(result.runs);
  } catch (const std::exception& e) {
    throw detail::stage_error("train", e);
  }

  return result;
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;

  HsiCube cube;
  GroundTruth gt;
  try {
    cube = load_cube(cfg.cube_path, cfg.cube_format);
    gt = load_ground_truth(cfg.gt_path, cfg.gt_format);
  } catch (const std::exception& e) {
    throw detail::stage_error("load", e);
  }

  PipelineResult result = run_pipeline_data(cube, gt, cfg);

  try {
    fs::create_directories(cfg.output_dir);
    const fs::path out(cfg.output_dir);

    {
      nlohmann::json echo = cfg;
      std::ofstream f(out / "config_echo.json");
      f << echo.dump(2) << "\n";
    }
    {
      nlohmann::json j;
      j["model"] = cfg.model_kind == ModelKind::Gcn ? "gcn" : "mobgcn";
      j["resolutions"] = result.resolutions_used;
      j["oa"] = {{"mean", result.summary.oa_mean}, {"std", result.summary.oa_std}};
      j["aa"] = {{"mean", result.summary.aa_mean}, {"std", result.summary.aa_std}};
      j["kappa"] = {{"mean", result.summary.kappa_mean}, {"std", result.summary.kappa_std}};
      j["runs"] = nlohmann::json::array();
      for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const auto& r = result.runs[i];
        j["runs"].push_back({{"seed", cfg.seed + i},
                             {"oa", r.oa},
                             {"aa", r.aa},
                             {"kappa", r.kappa},
                             {"per_class", r.per_class},
                             {"confusion", r.confusion}});
      }
      std::ofstream f(out / "metrics.json");
      f << j.dump(2) << "\n";
    }
    {
      std::ofstream f(out / "loss_trace.csv");
      f << "repeat,epoch,loss\n";
      for (std::size_t rep = 0; rep < result.loss_traces.size(); ++rep)
        for (std::size_t e = 0; e < result.loss_traces[rep].size(); ++e)
          f << rep << "," << e << "," << result.loss_traces[rep][e] << "\n";
    }
    if (result.scale_profile) {
      std::ofstream f(out / "scale_profile.csv");
      f << "scale,cv_avg,nn_ncv,nn_nroc,inliers\n";
      const ScaleProfile& p = *result.scale_profile;
      for (std::size_t i = 0; i < p.scales.size(); ++i)
        f << p.scales[i] << "," << p.cv_avg[i] << "," << p.nn_ncv[i] << "," << p.nn_nroc[i] << ","
          << p.inlier_count[i] << "\n";
    }
    const std::string map_name =
        cfg.model_kind == ModelKind::Gcn ? "map_gcn.ppm" : "map_mobgcn.ppm";
    render_map((out / map_name).string(), gt.height, gt.width, result.last_prediction,
               gt.class_count);
    render_boundaries((out / "segmentation.ppm").string(), result.segmentation);
  } catch (const std::exception& e) {
    throw detail::stage_error("emit", e);
  }

  return result;
}

}  // namespace mobgcn
