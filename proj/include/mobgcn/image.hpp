#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobgcn/errors.hpp"
#include "mobgcn/segmentation.hpp"

namespace mobgcn {

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed class palette; class 0 (unlabeled) renders black.
inline const std::vector<Rgb>& class_palette() {
  static const std::vector<Rgb> palette = {
      {0, 0, 0},       {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},
      {245, 130, 48},  {145, 30, 180},  {70, 240, 240},  {240, 50, 230},  {210, 245, 60},
      {250, 190, 212}, {0, 128, 128},   {220, 190, 255}, {170, 110, 40},  {255, 250, 200},
      {128, 0, 0},     {170, 255, 195}, {128, 128, 0},   {255, 215, 180}, {0, 0, 128},
      {128, 128, 128}, {255, 255, 255}, {100, 60, 20},   {20, 60, 100},   {60, 20, 100},
  };
  return palette;
}

inline void write_ppm(const std::string& path, std::size_t height, std::size_t width,
                      const std::vector<Rgb>& pixels) {
  if (pixels.size() != height * width) throw ShapeError("write_ppm: pixel count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("write_ppm: cannot write " + path);
  out << "P6\n" << width << " " << height << "\n255\n";
  for (const Rgb& px : pixels) out.write(reinterpret_cast<const char*>(px.data()), 3);
}

/// Renders a pixel class map with the fixed palette and drops a legend
/// JSON next to it.
inline void render_map(const std::string& path, std::size_t height, std::size_t width,
                       const std::vector<int>& classes, int class_count) {
  const auto& palette = class_palette();
  if (static_cast<std::size_t>(class_count) >= palette.size())
    throw ConfigError("render_map: more classes than palette entries");
  std::vector<Rgb> pixels(height * width);
  for (std::size_t p = 0; p < pixels.size(); ++p) {
    const int cls = classes[p];
    pixels[p] = (cls >= 0 && static_cast<std::size_t>(cls) < palette.size())
                    ? palette[static_cast<std::size_t>(cls)]
                    : palette[0];
  }
  write_ppm(path, height, width, pixels);

  nlohmann::json legend;
  for (int cls = 0; cls <= class_count; ++cls) {
    const Rgb& rgb = palette[static_cast<std::size_t>(cls)];
    legend[std::to_string(cls)] = {rgb[0], rgb[1], rgb[2]};
  }
  std::ofstream jout(path + ".legend.json");
  jout << legend.dump(2) << "\n";
}

/// Segmentation overlay: boundary pixels painted white over a grey base.
inline void render_boundaries(const std::string& path, const Segmentation& seg) {
  std::vector<Rgb> pixels(seg.height * seg.width, Rgb{96, 96, 96});
  for (std::size_t r = 0; r < seg.height; ++r)
    for (std::size_t c = 0; c < seg.width; ++c) {
      const int id = seg.at(r, c);
      const bool edge = (c + 1 < seg.width && seg.at(r, c + 1) != id) ||
                        (r + 1 < seg.height && seg.at(r + 1, c) != id);
      if (edge) pixels[r * seg.width + c] = Rgb{255, 255, 255};
    }
  write_ppm(path, seg.height, seg.width, pixels);
}

}  // namespace mobgcn
