// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "copilot/dataset/window.hpp"

namespace copilot::nn {

/// Depth values are divided by this many meters before entering the network.
inline constexpr float kDepthNormalization = 5.0f;

/// Network input: V x T frames of C channels, stored (V, T, C, H, W).
/// RGB channels are in [0, 1]; depth is meters / kDepthNormalization.
struct Clip {
  int views = 0;
  int frames = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<int> mounts;  // one per view
  std::vector<float> data;

  std::size_t index(int v, int t, int c, int y, int x) const {
    return ((((static_cast<std::size_t>(v) * frames + t) * channels + c) *
                 height +
             y) *
                width +
            x);
  }
  float at(int v, int t, int c, int y, int x) const {
    return data[index(v, t, c, y, x)];
  }
};

/// Builds the network input for `modality` from a window. Throws
/// ContractViolation when the window lacks a required channel.
Clip make_clip(const data::Window& w, data::Modality modality);

/// Keeps only the listed views (by position), preserving their order.
Clip select_views(const Clip& clip, const std::vector<int>& views);

}  // namespace copilot::nn
