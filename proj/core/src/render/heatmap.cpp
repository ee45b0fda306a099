// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/render/heatmap.hpp"

#include <cmath>

#include "copilot/common/error.hpp"

namespace copilot::render {

double default_sigma_px(int width) { return 0.05 * width; }

std::vector<double> gaussian_blur(const std::vector<double>& image, int width,
                                  int height, double sigma_px) {
  const int radius = static_cast<int>(std::floor(3.0 * sigma_px));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma_px * sigma_px));
  }
  std::vector<double> tmp(image.size(), 0.0);
  std::vector<double> out(image.size(), 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int cc = c + k;
        if (cc >= 0 && cc < width) acc += kernel[k + radius] * image[r * width + cc];
      }
      tmp[r * width + c] = acc;
    }
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int rr = r + k;
        if (rr >= 0 && rr < height) acc += kernel[k + radius] * tmp[rr * width + c];
      }
      out[r * width + c] = acc;
    }
  }
  return out;
}

Heatmap annotate_heatmap(std::span<const Vec3> contacts, const Camera& camera,
                         double sigma_px) {
  if (!(sigma_px > 0.0)) {
    throw ContractViolation("annotate_heatmap: sigma_px must be positive");
  }
  const int w = camera.intrinsics.width;
  const int h = camera.intrinsics.height;
  Heatmap map;
  map.width = w;
  map.height = h;
  map.values.assign(static_cast<std::size_t>(w) * h, 0.0f);

  std::vector<double> impulses(static_cast<std::size_t>(w) * h, 0.0);
  bool any = false;
  for (const Vec3& p : contacts) {
    if (auto px = project(p, camera)) {
      impulses[static_cast<std::size_t>(px->row) * w + px->col] = 1.0;
      any = true;
    }
  }
  if (!any) return map;

  const auto blurred = gaussian_blur(impulses, w, h, sigma_px);
  double total = 0.0;
  for (double v : blurred) total += v;
  for (std::size_t i = 0; i < blurred.size(); ++i) {
    map.values[i] = static_cast<float>(blurred[i] / total);
  }
  map.valid = true;
  return map;
}

}  // namespace copilot::render
