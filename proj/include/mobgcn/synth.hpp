#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "mobgcn/errors.hpp"
#include "mobgcn/hsi.hpp"

namespace mobgcn {

enum class RegionGeometry { Blocks, Voronoi };

struct SyntheticSceneSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t bands = 8;
  std::size_t classes = 4;
  RegionGeometry geometry = RegionGeometry::Blocks;
  std::vector<std::vector<double>> signatures;  // optional; generated when empty
  double noise_std = 0.05;
  std::size_t voronoi_sites = 24;
};

struct SyntheticScene {
  HsiCube cube;
  GroundTruth gt;
  std::vector<std::vector<double>> signatures;
  double signature_separation = 0.0;  // min pairwise distance
};

/// Piecewise-constant scene: each region carries one class signature plus
/// i.i.d. Gaussian noise. Every class is guaranteed at least one region.
inline SyntheticScene generate_synthetic(const SyntheticSceneSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2) throw ConfigError("generate_synthetic: need >= 2 classes");
  std::mt19937_64 rng(seed);

  SyntheticScene scene;
  scene.signatures = spec.signatures;
  if (scene.signatures.empty()) {
    // spread signatures on coordinate-ish directions so separation is controlled
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    for (std::size_t g = 0; g < spec.classes; ++g) {
      std::vector<double> sig(spec.bands, 0.2);
      sig[g % spec.bands] = 1.0;
      sig[(g / spec.bands) % spec.bands] += 0.4;
      for (double& v : sig) v += jitter(rng);
      scene.signatures.push_back(std::move(sig));
    }
  }
  if (scene.signatures.size() != spec.classes)
    throw ConfigError("generate_synthetic: signature count != classes");

  scene.signature_separation = 1e300;
  for (std::size_t a = 0; a < spec.classes; ++a)
    for (std::size_t b = a + 1; b < spec.classes; ++b) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < spec.bands; ++k) {
        const double diff = scene.signatures[a][k] - scene.signatures[b][k];
        d2 += diff * diff;
      }
      scene.signature_separation = std::min(scene.signature_separation, std::sqrt(d2));
    }

  const std::size_t H = spec.height, W = spec.width;
  std::vector<int> region_class(H * W, 0);

  if (spec.geometry == RegionGeometry::Blocks) {
    // near-square grid of blocks cycling through the classes
    std::size_t gr = 1;
    while (gr * gr < spec.classes) ++gr;
    const std::size_t gc = (spec.classes + gr - 1) / gr;
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        const std::size_t br = std::min(r * gr / H, gr - 1);
        const std::size_t bc = std::min(c * gc / W, gc - 1);
        region_class[r * W + c] = static_cast<int>((br * gc + bc) % spec.classes) + 1;
      }
  } else {
    const std::size_t sites = std::max(spec.voronoi_sites, spec.classes);
    std::uniform_int_distribution<std::size_t> rr(0, H - 1), cc(0, W - 1);
    std::vector<std::size_t> sr(sites), sc(sites);
    std::vector<int> scls(sites);
    for (std::size_t s = 0; s < sites; ++s) {
      sr[s] = rr(rng);
      sc[s] = cc(rng);
      scls[s] = static_cast<int>(s % spec.classes) + 1;  // every class gets a site
    }
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        double best = 1e300;
        int cls = 1;
        for (std::size_t s = 0; s < sites; ++s) {
          const double d2 = (double(r) - double(sr[s])) * (double(r) - double(sr[s])) +
                            (double(c) - double(sc[s])) * (double(c) - double(sc[s]));
          if (d2 < best) {
            best = d2;
            cls = scls[s];
          }
        }
        region_class[r * W + c] = cls;
      }
  }

  scene.cube.height = H;
  scene.cube.width = W;
  scene.cube.bands = spec.bands;
  scene.cube.values.resize(H * W * spec.bands);
  std::normal_distribution<double> noise(0.0, spec.noise_std);
  for (std::size_t p = 0; p < H * W; ++p) {
    const auto& sig = scene.signatures[static_cast<std::size_t>(region_class[p] - 1)];
    for (std::size_t k = 0; k < spec.bands; ++k)
      scene.cube.values[p * spec.bands + k] =
          static_cast<float>(sig[k] + (spec.noise_std > 0 ? noise(rng) : 0.0));
  }

  scene.gt.height = H;
  scene.gt.width = W;
  scene.gt.labels = region_class;
  scene.gt.class_count = static_cast<int>(spec.classes);
  return scene;
}

}  // namespace mobgcn
