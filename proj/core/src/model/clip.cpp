// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/model/clip.hpp"

#include <string>

#include "copilot/common/error.hpp"

namespace copilot::nn {

Clip make_clip(const data::Window& w, data::Modality modality) {
  const bool rgb = data::has_rgb(modality);
  const bool depth = data::has_depth(modality);
  const std::size_t frame_px = w.pixels();
  const std::size_t total =
      static_cast<std::size_t>(w.views) * w.frames * frame_px;
  if (rgb && w.rgb.size() != total * 3) {
    throw ContractViolation("window " + w.window_id + " has no RGB frames");
  }
  if (depth && w.depth.size() != total) {
    throw ContractViolation("window " + w.window_id + " has no depth frames");
  }
  Clip clip;
  clip.views = w.views;
  clip.frames = w.frames;
  clip.channels = data::modality_channels(modality);
  clip.height = w.height;
  clip.width = w.width;
  clip.mounts = w.mounts;
  clip.data.resize(total * clip.channels);
  for (int v = 0; v < w.views; ++v) {
    for (int t = 0; t < w.frames; ++t) {
      const std::size_t frame = static_cast<std::size_t>(v) * w.frames + t;
      for (int y = 0; y < w.height; ++y) {
        for (int x = 0; x < w.width; ++x) {
          const std::size_t px = frame * frame_px +
                                 static_cast<std::size_t>(y) * w.width + x;
          int c = 0;
          if (rgb) {
            for (; c < 3; ++c) {
              clip.data[clip.index(v, t, c, y, x)] =
                  static_cast<float>(w.rgb[px * 3 + c]) / 255.0f;
            }
          }
          if (depth) {
            clip.data[clip.index(v, t, c, y, x)] =
                w.depth[px] / kDepthNormalization;
          }
        }
      }
    }
  }
  return clip;
}

Clip select_views(const Clip& clip, const std::vector<int>& views) {
  Clip out = clip;
  out.views = static_cast<int>(views.size());
  out.mounts.clear();
  const std::size_t per_view = static_cast<std::size_t>(clip.frames) *
                               clip.channels * clip.height * clip.width;
  out.data.assign(per_view * views.size(), 0.0f);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const int v = views[i];
    if (v < 0 || v >= clip.views) {
      throw ContractViolation("view index " + std::to_string(v) +
                              " out of range");
    }
    out.mounts.push_back(clip.mounts[v]);
    std::copy_n(clip.data.begin() + static_cast<std::ptrdiff_t>(per_view * v),
                per_view,
                out.data.begin() + static_cast<std::ptrdiff_t>(per_view * i));
  }
  return out;
}

}  // namespace copilot::nn
