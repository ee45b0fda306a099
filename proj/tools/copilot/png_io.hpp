// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace copilot::cli {

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}
  std::uint8_t* at(int x, int y) {
    return &rgb[(std::size_t(y) * width + x) * 3];
  }
  const std::uint8_t* at(int x, int y) const {
    return &rgb[(std::size_t(y) * width + x) * 3];
  }
};

/// Throws copilot::Error on I/O or encoder failure.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

}  // namespace copilot::cli
