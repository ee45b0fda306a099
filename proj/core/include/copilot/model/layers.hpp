// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "copilot/common/rng.hpp"
#include "copilot/model/tensor.hpp"

// Differentiable building blocks. Activations are row-major matrices with
// one row per token (or pixel) and one column per channel. Every layer
// exposes forward() filling an optional cache and backward() that
// accumulates parameter gradients and returns the input gradient.

namespace copilot::nn {

template <typename S>
struct Linear {
  Parameter<S> weight;  // (in, out)
  Parameter<S> bias;    // (1, out)

  Linear() = default;
  Linear(const std::string& name, int in, int out);

  int in() const { return static_cast<int>(weight.value.rows()); }
  int out() const { return static_cast<int>(weight.value.cols()); }

  Mat<S> forward(const Mat<S>& x) const;
  Mat<S> backward(const Mat<S>& x, const Mat<S>& dy);
  void collect(ParamRefs<S>& out);
  void init(Rng& rng, double stddev);
};

template <typename S>
struct LayerNorm {
  struct Cache {
    Mat<S> xhat;
    ColVec<S> rstd;
  };

  Parameter<S> gamma;
  Parameter<S> beta;

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim);

  Mat<S> forward(const Mat<S>& x, Cache* cache) const;
  Mat<S> backward(const Cache& cache, const Mat<S>& dy);
  void collect(ParamRefs<S>& out);
};

template <typename S>
Mat<S> gelu(const Mat<S>& x);
/// dL/dx given the pre-activation x.
template <typename S>
Mat<S> gelu_backward(const Mat<S>& x, const Mat<S>& dy);

/// Partition of token rows into attention groups; tokens only attend
/// within their own group.
struct Grouping {
  int tokens = 0;
  std::vector<std::vector<int>> groups;
};

/// Multi-head softmax attention restricted to the groups of a Grouping.
template <typename S>
struct Attention {
  struct Cache {
    Mat<S> x;
    Mat<S> qkv;
    Mat<S> ctx;
    std::vector<Mat<S>> probs;  // [group * heads + head]
  };

  Linear<S> qkv;
  Linear<S> proj;
  int heads = 1;

  Attention() = default;
  Attention(const std::string& name, int dim, int heads);

  Mat<S> forward(const Mat<S>& x, const Grouping& g, Cache* cache) const;
  Mat<S> backward(const Cache& cache, const Grouping& g, const Mat<S>& dy);
  void collect(ParamRefs<S>& out);
};

/// 3x3 convolution, stride 1, zero padding 1, on an (h*w, c) feature map.
template <typename S>
struct Conv3x3 {
  struct Cache {
    Mat<S> col;
    int h = 0;
    int w = 0;
  };

  Parameter<S> weight;  // (9 * cin, cout), rows ordered (ky, kx, cin)
  Parameter<S> bias;    // (1, cout)

  Conv3x3() = default;
  Conv3x3(const std::string& name, int cin, int cout);

  int cin() const { return static_cast<int>(weight.value.rows() / 9); }
  int cout() const { return static_cast<int>(weight.value.cols()); }

  Mat<S> forward(const Mat<S>& x, int h, int w, Cache* cache) const;
  Mat<S> backward(const Cache& cache, const Mat<S>& dy);
  void collect(ParamRefs<S>& out);
};

template <typename S>
struct GroupNorm {
  struct Cache {
    Mat<S> xhat;
    std::vector<S> rstd;
  };

  Parameter<S> gamma;
  Parameter<S> beta;
  int groups = 1;

  GroupNorm() = default;
  GroupNorm(const std::string& name, int channels, int groups);

  Mat<S> forward(const Mat<S>& x, Cache* cache) const;
  Mat<S> backward(const Cache& cache, const Mat<S>& dy);
  void collect(ParamRefs<S>& out);
};

/// Nearest-neighbour 2x up-sampling of an (h*w, c) map.
template <typename S>
Mat<S> upsample2x(const Mat<S>& x, int h, int w);
template <typename S>
Mat<S> upsample2x_backward(const Mat<S>& dy, int h, int w);

/// Row-wise numerically stable softmax of a vector.
template <typename S>
ColVec<S> softmax(const ColVec<S>& logits);

}  // namespace copilot::nn
