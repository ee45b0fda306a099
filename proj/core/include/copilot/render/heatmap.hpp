// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "copilot/render/camera.hpp"

namespace copilot::render {

/// Per-pixel collision-region distribution. Valid maps sum to one; invalid
/// maps are all zero.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major
  bool valid = false;
};

/// Default kernel width: 5% of the image width.
double default_sigma_px(int width);

/// Sets every pixel hit by a projected contact to 1, smooths with a
/// Gaussian (sigma_px, truncated at 3 sigma, zero padding) and normalizes.
/// Contacts are not occlusion tested. Throws ContractViolation for
/// sigma_px <= 0.
Heatmap annotate_heatmap(std::span<const Vec3> contacts, const Camera& camera,
                         double sigma_px);

/// Separable Gaussian blur used by annotate_heatmap, exposed for tests.
std::vector<double> gaussian_blur(const std::vector<double>& image, int width,
                                  int height, double sigma_px);

}  // namespace copilot::render
