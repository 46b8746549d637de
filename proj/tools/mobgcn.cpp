// Command-line front end: batch pipeline runs plus standalone access to the
// segmentation, scale-selection, synthesis, metrics, and rendering stages.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobgcn/pipeline.hpp"
#include "mobgcn/synth.hpp"

using namespace mobgcn;

namespace {

CubeFormat parse_cube_format(const std::string& s) {
  if (s == "npy3d") return CubeFormat::Npy3d;
  if (s == "raw_bsq") return CubeFormat::RawBsq;
  throw ConfigError("unknown cube format: " + s);
}

GtFormat parse_gt_format(const std::string& s) {
  if (s == "npy2d") return GtFormat::Npy2d;
  if (s == "csv") return GtFormat::Csv;
  throw ConfigError("unknown ground-truth format: " + s);
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  return nlohmann::json::parse(in).get<PipelineConfig>();
}

ReducedCube reduce_cube(const std::string& path, const std::string& format) {
  const HsiCube cube = load_cube(path, parse_cube_format(format));
  return pca_reduce(normalize_bands(cube), 0.999);
}

int cmd_run(const std::string& config_path, PipelineConfig cfg) {
  if (!config_path.empty()) {
    PipelineConfig from_file = load_config(config_path);
    // file settings win for anything the flags left untouched; flags that
    // were set explicitly are merged in by the caller before this point
    from_file.output_dir = cfg.output_dir.empty() ? from_file.output_dir : cfg.output_dir;
    if (!cfg.cube_path.empty()) from_file.cube_path = cfg.cube_path;
    if (!cfg.gt_path.empty()) from_file.gt_path = cfg.gt_path;
    cfg = from_file;
  }
  PipelineResult res = run_pipeline(cfg);
  std::cout << "model: " << (cfg.model_kind == ModelKind::Gcn ? "gcn" : "mobgcn") << "\n";
  std::cout << "superpixels: " << res.segmentation.n << "\n";
  std::cout << "resolutions:";
  for (std::size_t r : res.resolutions_used) std::cout << " " << r;
  std::cout << "\n";
  std::cout << "OA:    " << res.summary.oa_mean << " +/- " << res.summary.oa_std << "\n";
  std::cout << "AA:    " << res.summary.aa_mean << " +/- " << res.summary.aa_std << "\n";
  std::cout << "Kappa: " << res.summary.kappa_mean << " +/- " << res.summary.kappa_std << "\n";
  std::cout << "artifacts in " << cfg.output_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpixel-graph hyperspectral image classification pipeline"};
  app.require_subcommand(1);

  // ---- run ----
  auto* run = app.add_subcommand("run", "End-to-end pipeline: load, segment, train, evaluate");
  std::string run_config, run_model = "mobgcn", run_cube_format = "npy3d", run_gt_format = "npy2d";
  std::string run_resolutions;
  PipelineConfig cfg;
  run->add_option("--config", run_config, "JSON config file; flags override");
  run->add_option("--cube", cfg.cube_path, "Path to the data cube (NPY or raw BSQ)");
  run->add_option("--gt", cfg.gt_path, "Path to the ground-truth labels");
  run->add_option("--cube-format", run_cube_format, "npy3d | raw_bsq")->capture_default_str();
  run->add_option("--gt-format", run_gt_format, "npy2d | csv")->capture_default_str();
  run->add_option("--model", run_model, "gcn | mobgcn")->capture_default_str();
  run->add_option("--resolutions", run_resolutions,
                  "Comma-separated cluster counts, or 'auto' for scale selection");
  run->add_option("--hidden", cfg.hidden, "Hidden width")->capture_default_str();
  run->add_option("--tau", cfg.tau, "Gumbel-softmax temperature")->capture_default_str();
  run->add_option("--fraction", cfg.train_fraction, "Training label fraction")
      ->capture_default_str();
  run->add_option("--mu", cfg.mu, "Smoothness weight")->capture_default_str();
  run->add_option("--lr", cfg.lr, "Learning rate")->capture_default_str();
  run->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
  run->add_option("--repeats", cfg.repeats, "Independent repeats")->capture_default_str();
  run->add_option("--seed", cfg.seed, "Base seed")->capture_default_str();
  run->add_option("--scale-k", cfg.segmentation.scale_k,
                  "Segmentation scale; <= 0 derives it from the median edge weight")
      ->capture_default_str();
  run->add_option("--min-size", cfg.segmentation.min_size, "Minimum superpixel size")
      ->capture_default_str();
  run->add_option("--sigma", cfg.segmentation.smoothing_sigma, "Pre-segmentation smoothing")
      ->capture_default_str();
  run->add_option("--knn", cfg.graph.k, "Graph neighbors per node")->capture_default_str();
  run->add_option("--out", cfg.output_dir, "Output directory")->capture_default_str();

  // ---- segment ----
  auto* segment = app.add_subcommand("segment", "Superpixel segmentation only");
  std::string seg_cube, seg_cube_format = "npy3d", seg_out = "segments";
  SegmentationParams seg_params;
  segment->add_option("--cube", seg_cube, "Path to the data cube")->required();
  segment->add_option("--cube-format", seg_cube_format, "npy3d | raw_bsq")->capture_default_str();
  segment->add_option("--scale-k", seg_params.scale_k, "Scale parameter; <= 0 = auto")
      ->capture_default_str();
  segment->add_option("--min-size", seg_params.min_size, "Minimum segment size")
      ->capture_default_str();
  segment->add_option("--sigma", seg_params.smoothing_sigma, "Gaussian smoothing sigma")
      ->capture_default_str();
  segment->add_option("--out", seg_out, "Output prefix (.npy labels + .ppm overlay)")
      ->capture_default_str();

  // ---- scales ----
  auto* scales = app.add_subcommand("scales", "NN-nRoC scale profile and optimal resolutions");
  std::string sc_cube, sc_cube_format = "npy3d", sc_out = "scale_profile.csv";
  std::size_t sc_min = 2, sc_max = 100, sc_m = 5;
  std::uint64_t sc_seed = 0;
  SegmentationParams sc_seg;
  scales->add_option("--cube", sc_cube, "Path to the data cube")->required();
  scales->add_option("--cube-format", sc_cube_format, "npy3d | raw_bsq")->capture_default_str();
  scales->add_option("--candidate-min", sc_min, "Smallest cluster count")->capture_default_str();
  scales->add_option("--candidate-max", sc_max, "Largest cluster count")->capture_default_str();
  scales->add_option("--top", sc_m, "Number of peaks to select")->capture_default_str();
  scales->add_option("--seed", sc_seed, "Seed")->capture_default_str();
  scales->add_option("--min-size", sc_seg.min_size, "Minimum segment size")->capture_default_str();
  scales->add_option("--out", sc_out, "Profile CSV path")->capture_default_str();

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled scene");
  SyntheticSceneSpec synth_spec;
  std::string synth_geometry = "blocks", synth_cube_out = "synth_cube.npy",
              synth_gt_out = "synth_gt.npy";
  std::uint64_t synth_seed = 0;
  synth->add_option("--height", synth_spec.height, "Scene height")->capture_default_str();
  synth->add_option("--width", synth_spec.width, "Scene width")->capture_default_str();
  synth->add_option("--bands", synth_spec.bands, "Spectral bands")->capture_default_str();
  synth->add_option("--classes", synth_spec.classes, "Planted classes")->capture_default_str();
  synth->add_option("--geometry", synth_geometry, "blocks | voronoi")->capture_default_str();
  synth->add_option("--sites", synth_spec.voronoi_sites, "Voronoi sites")->capture_default_str();
  synth->add_option("--noise", synth_spec.noise_std, "Gaussian noise std")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Seed")->capture_default_str();
  synth->add_option("--cube-out", synth_cube_out, "Cube NPY path")->capture_default_str();
  synth->add_option("--gt-out", synth_gt_out, "Ground-truth NPY path")->capture_default_str();

  // ---- metrics ----
  auto* metrics = app.add_subcommand("metrics", "Score a prediction map against ground truth");
  std::string met_pred, met_gt, met_gt_format = "npy2d";
  metrics->add_option("--pred", met_pred, "Predicted class map (NPY, classes 1..c)")->required();
  metrics->add_option("--gt", met_gt, "Ground-truth labels")->required();
  metrics->add_option("--gt-format", met_gt_format, "npy2d | csv")->capture_default_str();

  // ---- render ----
  auto* render = app.add_subcommand("render", "Render a class map NPY to a PPM image");
  std::string ren_labels, ren_out = "map.ppm";
  render->add_option("--labels", ren_labels, "Class map NPY")->required();
  render->add_option("--out", ren_out, "Output PPM path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.cube_format = parse_cube_format(run_cube_format);
      cfg.gt_format = parse_gt_format(run_gt_format);
      cfg.model_kind = run_model == "gcn" ? ModelKind::Gcn : ModelKind::MobGcn;
      if (run_resolutions == "auto") {
        cfg.resolutions_auto = true;
      } else if (!run_resolutions.empty()) {
        std::size_t pos = 0;
        std::string rest = run_resolutions;
        while (!rest.empty()) {
          pos = rest.find(',');
          cfg.resolutions.push_back(std::stoul(rest.substr(0, pos)));
          rest = pos == std::string::npos ? "" : rest.substr(pos + 1);
        }
      }
      return cmd_run(run_config, cfg);
    }

    if (*segment) {
      const ReducedCube reduced = reduce_cube(seg_cube, seg_cube_format);
      const Segmentation seg = felzenszwalb_segment(reduced, seg_params);
      std::vector<std::int32_t> labels(seg.segment_id.begin(), seg.segment_id.end());
      npy::save_i32(seg_out + ".npy", {seg.height, seg.width}, labels);
      render_boundaries(seg_out + ".ppm", seg);
      std::cout << "segments: " << seg.n << "\n";
      return 0;
    }

    if (*scales) {
      const ReducedCube reduced = reduce_cube(sc_cube, sc_cube_format);
      const Segmentation seg = felzenszwalb_segment(reduced, sc_seg);
      const SuperpixelFeatures feats = compute_features(seg, reduced);
      std::vector<std::size_t> candidates;
      for (std::size_t k = std::max<std::size_t>(sc_min, 2);
           k <= std::min<std::size_t>(sc_max, feats.n); ++k)
        candidates.push_back(k);
      const ScaleProfile profile = build_scale_profile(feats.mean, candidates, sc_seed);
      const OptimalScales opt = select_optimal_scales(profile, sc_m);
      std::ofstream f(sc_out);
      f << "scale,cv_avg,nn_ncv,nn_nroc,inliers\n";
      for (std::size_t i = 0; i < profile.scales.size(); ++i)
        f << profile.scales[i] << "," << profile.cv_avg[i] << "," << profile.nn_ncv[i] << ","
          << profile.nn_nroc[i] << "," << profile.inlier_count[i] << "\n";
      std::cout << "selected resolutions:";
      for (std::size_t r : opt.selected) std::cout << " " << r;
      std::cout << "\nprofile written to " << sc_out << "\n";
      return 0;
    }

    if (*synth) {
      synth_spec.geometry =
          synth_geometry == "voronoi" ? RegionGeometry::Voronoi : RegionGeometry::Blocks;
      const SyntheticScene scene = generate_synthetic(synth_spec, synth_seed);
      save_cube(synth_cube_out, scene.cube);
      save_ground_truth(synth_gt_out, scene.gt);
      std::cout << "scene " << synth_spec.height << "x" << synth_spec.width << "x"
                << synth_spec.bands << ", " << synth_spec.classes
                << " classes, signature separation " << scene.signature_separation << "\n";
      return 0;
    }

    if (*metrics) {
      const npy::Array pred_arr = npy::load(met_pred);
      std::vector<int> pred(pred_arr.values.begin(), pred_arr.values.end());
      const GroundTruth gt = load_ground_truth(met_gt, parse_gt_format(met_gt_format));
      std::vector<bool> test(gt.labels.size());
      for (std::size_t p = 0; p < test.size(); ++p) test[p] = gt.labels[p] > 0;
      const MetricsReport rep = compute_metrics(pred, gt, test);
      nlohmann::json j;
      j["oa"] = rep.oa;
      j["aa"] = rep.aa;
      j["kappa"] = rep.kappa;
      j["per_class"] = rep.per_class;
      j["confusion"] = rep.confusion;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*render) {
      const npy::Array arr = npy::load(ren_labels);
      if (arr.shape.size() != 2) throw FormatError("render: class map must be 2-D");
      std::vector<int> classes(arr.values.begin(), arr.values.end());
      int class_count = 0;
      for (int c : classes) class_count = std::max(class_count, c);
      render_map(ren_out, arr.shape[0], arr.shape[1], classes, class_count);
      std::cout << "map written to " << ren_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
