// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/model/layers.hpp"

#include <cmath>
#include <numbers>

#include "copilot/common/error.hpp"

namespace copilot::nn {

namespace {

template <typename S>
void init_truncated(Mat<S>& m, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<S>(rng.truncated_normal(stddev));
  }
}

}  // namespace

// ---------------------------------------------------------------- Linear

template <typename S>
Linear<S>::Linear(const std::string& name, int in, int out)
    : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {}

template <typename S>
Mat<S> Linear<S>::forward(const Mat<S>& x) const {
  if (x.cols() != weight.value.rows()) {
    throw ContractViolation("linear " + weight.name + ": input width " +
                            std::to_string(x.cols()) + " != " +
                            std::to_string(weight.value.rows()));
  }
  Mat<S> y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

template <typename S>
Mat<S> Linear<S>::backward(const Mat<S>& x, const Mat<S>& dy) {
  weight.grad.noalias() += x.transpose() * dy;
  bias.grad.row(0) += dy.colwise().sum();
  return dy * weight.value.transpose();
}

template <typename S>
void Linear<S>::collect(ParamRefs<S>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename S>
void Linear<S>::init(Rng& rng, double stddev) {
  init_truncated(weight.value, rng, stddev);
  bias.value.setZero();
}

// ------------------------------------------------------------- LayerNorm

template <typename S>
LayerNorm<S>::LayerNorm(const std::string& name, int dim)
    : gamma(name + ".gamma", 1, dim), beta(name + ".beta", 1, dim) {
  gamma.value.setOnes();
}

template <typename S>
Mat<S> LayerNorm<S>::forward(const Mat<S>& x, Cache* cache) const {
  const auto n = x.rows();
  const auto d = static_cast<S>(x.cols());
  Mat<S> xhat(n, x.cols());
  ColVec<S> rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S mean = x.row(i).sum() / d;
    const auto centered = x.row(i).array() - mean;
    const S var = centered.square().sum() / d;
    rstd(i) = S(1) / std::sqrt(var + static_cast<S>(1e-5));
    xhat.row(i) = centered * rstd(i);
  }
  Mat<S> y = (xhat.array().rowwise() * gamma.value.row(0).array()).matrix();
  y.rowwise() += beta.value.row(0);
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename S>
Mat<S> LayerNorm<S>::backward(const Cache& cache, const Mat<S>& dy) {
  gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  const Mat<S> dxhat =
      (dy.array().rowwise() * gamma.value.row(0).array()).matrix();
  const auto d = static_cast<S>(dy.cols());
  Mat<S> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const S m1 = dxhat.row(i).sum() / d;
    const S m2 = dxhat.row(i).dot(cache.xhat.row(i)) / d;
    dx.row(i) = (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2) *
                cache.rstd(i);
  }
  return dx;
}

template <typename S>
void LayerNorm<S>::collect(ParamRefs<S>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ------------------------------------------------------------------ GELU

template <typename S>
Mat<S> gelu(const Mat<S>& x) {
  const S inv_sqrt2 = static_cast<S>(1.0 / std::numbers::sqrt2);
  return x.unaryExpr([inv_sqrt2](S v) {
    return static_cast<S>(0.5) * v * (S(1) + std::erf(v * inv_sqrt2));
  });
}

template <typename S>
Mat<S> gelu_backward(const Mat<S>& x, const Mat<S>& dy) {
  const S inv_sqrt2 = static_cast<S>(1.0 / std::numbers::sqrt2);
  const S inv_sqrt2pi =
      static_cast<S>(1.0 / std::sqrt(2.0 * std::numbers::pi));
  const Mat<S> deriv = x.unaryExpr([=](S v) {
    const S cdf = static_cast<S>(0.5) * (S(1) + std::erf(v * inv_sqrt2));
    const S pdf = inv_sqrt2pi * std::exp(static_cast<S>(-0.5) * v * v);
    return cdf + v * pdf;
  });
  return (dy.array() * deriv.array()).matrix();
}

// ------------------------------------------------------------- Attention

template <typename S>
Attention<S>::Attention(const std::string& name, int dim, int h)
    : qkv(name + ".qkv", dim, 3 * dim), proj(name + ".proj", dim, dim), heads(h) {
  if (h <= 0 || dim % h != 0) {
    throw ContractViolation("attention " + name + ": dim " +
                            std::to_string(dim) + " not divisible by " +
                            std::to_string(h) + " heads");
  }
}

template <typename S>
ColVec<S> softmax(const ColVec<S>& logits) {
  const S m = logits.maxCoeff();
  ColVec<S> e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

template <typename S>
Mat<S> Attention<S>::forward(const Mat<S>& x, const Grouping& g,
                             Cache* cache) const {
  if (g.tokens != x.rows()) {
    throw ContractViolation("attention: grouping covers " +
                            std::to_string(g.tokens) + " tokens, input has " +
                            std::to_string(x.rows()));
  }
  const int dim = static_cast<int>(x.cols());
  const int dh = dim / heads;
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
  Mat<S> qkvm = qkv.forward(x);
  Mat<S> ctx = Mat<S>::Zero(x.rows(), dim);
  if (cache != nullptr) {
    cache->probs.clear();
    cache->probs.reserve(g.groups.size() * heads);
  }
  for (const auto& rows : g.groups) {
    const Mat<S> gq = qkvm(rows, Eigen::all);
    Mat<S> out(static_cast<Eigen::Index>(rows.size()), dim);
    for (int h = 0; h < heads; ++h) {
      const auto q = gq.middleCols(h * dh, dh);
      const auto k = gq.middleCols(dim + h * dh, dh);
      const auto v = gq.middleCols(2 * dim + h * dh, dh);
      Mat<S> p = (q * k.transpose()) * scale;
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const S m = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - m).exp();
        p.row(r) /= p.row(r).sum();
      }
      out.middleCols(h * dh, dh).noalias() = p * v;
      if (cache != nullptr) cache->probs.push_back(std::move(p));
    }
    ctx(rows, Eigen::all) = out;
  }
  Mat<S> y = proj.forward(ctx);
  if (cache != nullptr) {
    cache->x = x;
    cache->qkv = std::move(qkvm);
    cache->ctx = std::move(ctx);
  }
  return y;
}

template <typename S>
Mat<S> Attention<S>::backward(const Cache& cache, const Grouping& g,
                              const Mat<S>& dy) {
  const int dim = static_cast<int>(cache.x.cols());
  const int dh = dim / heads;
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
  const Mat<S> dctx = proj.backward(cache.ctx, dy);
  Mat<S> dqkv = Mat<S>::Zero(cache.x.rows(), 3 * dim);
  std::size_t pi = 0;
  for (const auto& rows : g.groups) {
    const Mat<S> gq = cache.qkv(rows, Eigen::all);
    const Mat<S> dc = dctx(rows, Eigen::all);
    Mat<S> dg(gq.rows(), gq.cols());
    for (int h = 0; h < heads; ++h) {
      const Mat<S>& p = cache.probs[pi++];
      const auto q = gq.middleCols(h * dh, dh);
      const auto k = gq.middleCols(dim + h * dh, dh);
      const auto v = gq.middleCols(2 * dim + h * dh, dh);
      const auto dout = dc.middleCols(h * dh, dh);
      dg.middleCols(2 * dim + h * dh, dh).noalias() = p.transpose() * dout;
      const Mat<S> dp = dout * v.transpose();
      const ColVec<S> inner = (dp.array() * p.array()).rowwise().sum();
      const Mat<S> ds =
          (p.array() * (dp.array().colwise() - inner.array())).matrix() * scale;
      dg.middleCols(h * dh, dh).noalias() = ds * k;
      dg.middleCols(dim + h * dh, dh).noalias() = ds.transpose() * q;
    }
    dqkv(rows, Eigen::all) = dg;
  }
  return qkv.backward(cache.x, dqkv);
}

template <typename S>
void Attention<S>::collect(ParamRefs<S>& out) {
  qkv.collect(out);
  proj.collect(out);
}

// --------------------------------------------------------------- Conv3x3

template <typename S>
Conv3x3<S>::Conv3x3(const std::string& name, int cin, int cout)
    : weight(name + ".weight", 9 * cin, cout), bias(name + ".bias", 1, cout) {}

template <typename S>
Mat<S> Conv3x3<S>::forward(const Mat<S>& x, int h, int w, Cache* cache) const {
  const int c = cin();
  if (x.rows() != static_cast<Eigen::Index>(h) * w || x.cols() != c) {
    throw ContractViolation("conv " + weight.name + ": bad input shape");
  }
  Mat<S> col = Mat<S>::Zero(static_cast<Eigen::Index>(h) * w, 9 * c);
  for (int r = 0; r < h; ++r) {
    for (int q = 0; q < w; ++q) {
      const Eigen::Index p = static_cast<Eigen::Index>(r) * w + q;
      for (int ky = 0; ky < 3; ++ky) {
        const int rr = r + ky - 1;
        if (rr < 0 || rr >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int qq = q + kx - 1;
          if (qq < 0 || qq >= w) continue;
          col.row(p).segment((ky * 3 + kx) * c, c) =
              x.row(static_cast<Eigen::Index>(rr) * w + qq);
        }
      }
    }
  }
  Mat<S> y = col * weight.value;
  y.rowwise() += bias.value.row(0);
  if (cache != nullptr) {
    cache->col = std::move(col);
    cache->h = h;
    cache->w = w;
  }
  return y;
}

template <typename S>
Mat<S> Conv3x3<S>::backward(const Cache& cache, const Mat<S>& dy) {
  weight.grad.noalias() += cache.col.transpose() * dy;
  bias.grad.row(0) += dy.colwise().sum();
  const Mat<S> dcol = dy * weight.value.transpose();
  const int c = cin();
  const int h = cache.h;
  const int w = cache.w;
  Mat<S> dx = Mat<S>::Zero(static_cast<Eigen::Index>(h) * w, c);
  for (int r = 0; r < h; ++r) {
    for (int q = 0; q < w; ++q) {
      const Eigen::Index p = static_cast<Eigen::Index>(r) * w + q;
      for (int ky = 0; ky < 3; ++ky) {
        const int rr = r + ky - 1;
        if (rr < 0 || rr >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int qq = q + kx - 1;
          if (qq < 0 || qq >= w) continue;
          dx.row(static_cast<Eigen::Index>(rr) * w + qq) +=
              dcol.row(p).segment((ky * 3 + kx) * c, c);
        }
      }
    }
  }
  return dx;
}

template <typename S>
void Conv3x3<S>::collect(ParamRefs<S>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ------------------------------------------------------------- GroupNorm

template <typename S>
GroupNorm<S>::GroupNorm(const std::string& name, int channels, int g)
    : gamma(name + ".gamma", 1, channels),
      beta(name + ".beta", 1, channels),
      groups(g) {
  if (g <= 0 || channels % g != 0) {
    throw ContractViolation("group norm " + name + ": " +
                            std::to_string(channels) +
                            " channels not divisible by " + std::to_string(g));
  }
  gamma.value.setOnes();
}

template <typename S>
Mat<S> GroupNorm<S>::forward(const Mat<S>& x, Cache* cache) const {
  const int cg = static_cast<int>(x.cols()) / groups;
  const auto count = static_cast<S>(x.rows() * cg);
  Mat<S> xhat(x.rows(), x.cols());
  std::vector<S> rstd(groups);
  for (int g = 0; g < groups; ++g) {
    const auto block = x.middleCols(g * cg, cg);
    const S mean = block.sum() / count;
    const S var = (block.array() - mean).square().sum() / count;
    rstd[g] = S(1) / std::sqrt(var + static_cast<S>(1e-5));
    xhat.middleCols(g * cg, cg) = (block.array() - mean) * rstd[g];
  }
  Mat<S> y = (xhat.array().rowwise() * gamma.value.row(0).array()).matrix();
  y.rowwise() += beta.value.row(0);
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename S>
Mat<S> GroupNorm<S>::backward(const Cache& cache, const Mat<S>& dy) {
  gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  const Mat<S> dxhat =
      (dy.array().rowwise() * gamma.value.row(0).array()).matrix();
  const int cg = static_cast<int>(dy.cols()) / groups;
  const auto count = static_cast<S>(dy.rows() * cg);
  Mat<S> dx(dy.rows(), dy.cols());
  for (int g = 0; g < groups; ++g) {
    const auto dh = dxhat.middleCols(g * cg, cg);
    const auto xh = cache.xhat.middleCols(g * cg, cg);
    const S m1 = dh.sum() / count;
    const S m2 = (dh.array() * xh.array()).sum() / count;
    dx.middleCols(g * cg, cg) = (dh.array() - m1 - xh.array() * m2) * cache.rstd[g];
  }
  return dx;
}

template <typename S>
void GroupNorm<S>::collect(ParamRefs<S>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ------------------------------------------------------------ Upsampling

template <typename S>
Mat<S> upsample2x(const Mat<S>& x, int h, int w) {
  const int w2 = 2 * w;
  Mat<S> y(static_cast<Eigen::Index>(4) * h * w, x.cols());
  for (int r = 0; r < 2 * h; ++r) {
    for (int q = 0; q < w2; ++q) {
      y.row(static_cast<Eigen::Index>(r) * w2 + q) =
          x.row(static_cast<Eigen::Index>(r / 2) * w + q / 2);
    }
  }
  return y;
}

template <typename S>
Mat<S> upsample2x_backward(const Mat<S>& dy, int h, int w) {
  const int w2 = 2 * w;
  Mat<S> dx = Mat<S>::Zero(static_cast<Eigen::Index>(h) * w, dy.cols());
  for (int r = 0; r < 2 * h; ++r) {
    for (int q = 0; q < w2; ++q) {
      dx.row(static_cast<Eigen::Index>(r / 2) * w + q / 2) +=
          dy.row(static_cast<Eigen::Index>(r) * w2 + q);
    }
  }
  return dx;
}

#define COPILOT_INSTANTIATE(S)                                         \
  template struct Linear<S>;                                           \
  template struct LayerNorm<S>;                                        \
  template struct Attention<S>;                                        \
  template struct Conv3x3<S>;                                          \
  template struct GroupNorm<S>;                                        \
  template Mat<S> gelu<S>(const Mat<S>&);                              \
  template Mat<S> gelu_backward<S>(const Mat<S>&, const Mat<S>&);      \
  template Mat<S> upsample2x<S>(const Mat<S>&, int, int);              \
  template Mat<S> upsample2x_backward<S>(const Mat<S>&, int, int);     \
  template ColVec<S> softmax<S>(const ColVec<S>&);

COPILOT_INSTANTIATE(float)
COPILOT_INSTANTIATE(double)

#undef COPILOT_INSTANTIATE

}  // namespace copilot::nn
