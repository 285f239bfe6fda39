// SPDX-License-Identifier: Apache-2.0
#include "hig/core/nn_ops.hpp"

#include <algorithm>
#include <cmath>

#include "hig/core/kernels.hpp"

namespace hig::nn {

namespace {

void require_same(const DiffArray& a, const DiffArray& b, const char* op) {
  if (a.shape() != b.shape())
    throw Error(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                shape_string(b.shape()));
}

void require_rank(const DiffArray& x, std::size_t rank, const char* op) {
  if (x.ndim() != rank)
    throw Error(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                shape_string(x.shape()));
}

template <class F>
void add_into(detail::Node& in, F&& f) {
  if (!in.requires_grad) return;
  auto& g = in.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += f(i);
}

}  // namespace

DiffArray add(const DiffArray& a, const DiffArray& b) {
  require_same(a, b, "add");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return record("add", a.shape(), std::move(out), {a, b}, [](detail::Node& n) {
    add_into(*n.inputs[0], [&](std::size_t i) { return n.grad[i]; });
    add_into(*n.inputs[1], [&](std::size_t i) { return n.grad[i]; });
  });
}

DiffArray sub(const DiffArray& a, const DiffArray& b) {
  require_same(a, b, "sub");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return record("sub", a.shape(), std::move(out), {a, b}, [](detail::Node& n) {
    add_into(*n.inputs[0], [&](std::size_t i) { return n.grad[i]; });
    add_into(*n.inputs[1], [&](std::size_t i) { return -n.grad[i]; });
  });
}

DiffArray mul(const DiffArray& a, const DiffArray& b) {
  require_same(a, b, "mul");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return record("mul", a.shape(), std::move(out), {a, b}, [](detail::Node& n) {
    auto& na = *n.inputs[0];
    auto& nb = *n.inputs[1];
    add_into(na, [&](std::size_t i) { return n.grad[i] * nb.value[i]; });
    add_into(nb, [&](std::size_t i) { return n.grad[i] * na.value[i]; });
  });
}

DiffArray scale(const DiffArray& x, Real s) {
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * xv[i];
  return record("scale", x.shape(), std::move(out), {x}, [s](detail::Node& n) {
    add_into(*n.inputs[0], [&](std::size_t i) { return s * n.grad[i]; });
  });
}

DiffArray add_scalar(const DiffArray& x, Real s) {
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + s;
  return record("add_scalar", x.shape(), std::move(out), {x}, [](detail::Node& n) {
    add_into(*n.inputs[0], [&](std::size_t i) { return n.grad[i]; });
  });
}

DiffArray silu(const DiffArray& x) {
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] / (Real(1) + std::exp(-xv[i]));
  return record("silu", x.shape(), std::move(out), {x}, [](detail::Node& n) {
    auto& in = *n.inputs[0];
    add_into(in, [&](std::size_t i) {
      const Real v = in.value[i];
      const Real s = Real(1) / (Real(1) + std::exp(-v));
      return n.grad[i] * (s + v * s * (1 - s));
    });
  });
}

DiffArray scale_batch(const DiffArray& x, const std::vector<Real>& per_batch) {
  if (x.ndim() < 1 || x.dim(0) != per_batch.size())
    throw Error("scale_batch: one factor per batch element required");
  const std::size_t per = x.numel() / per_batch.size();
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = per_batch[i / per] * xv[i];
  return record("scale_batch", x.shape(), std::move(out), {x}, [per_batch, per](detail::Node& n) {
    add_into(*n.inputs[0], [&](std::size_t i) { return per_batch[i / per] * n.grad[i]; });
  });
}

DiffArray linear(const DiffArray& x, const DiffArray& w) {
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  const std::size_t rows = x.dim(0);
  const std::size_t in = x.dim(1);
  const std::size_t out_dim = w.dim(0);
  if (w.dim(1) != in)
    throw Error("linear: input has " + std::to_string(in) + " features, weight expects " +
                std::to_string(w.dim(1)));
  std::vector<Real> out(rows * out_dim);
  if (rows > 0) kernels::gemm_nt(rows, out_dim, in, x.values().data(), w.values().data(), out.data(), false);
  return record("linear", {rows, out_dim}, std::move(out), {x, w},
                [rows, in, out_dim](detail::Node& n) {
                  if (rows == 0) return;
                  auto& nx = *n.inputs[0];
                  auto& nw = *n.inputs[1];
                  if (nx.requires_grad)
                    kernels::gemm_nn(rows, in, out_dim, n.grad.data(), nw.value.data(),
                                     nx.grad_buffer().data(), true);
                  if (nw.requires_grad)
                    kernels::gemm_tn(out_dim, in, rows, n.grad.data(), nx.value.data(),
                                     nw.grad_buffer().data(), true);
                });
}

DiffArray conv2d(const DiffArray& x, const DiffArray& w) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 4, "conv2d");
  kernels::ConvShape s;
  s.batch = x.dim(0);
  s.in_channels = x.dim(1);
  s.height = x.dim(2);
  s.width = x.dim(3);
  s.out_channels = w.dim(0);
  s.kernel = w.dim(2);
  if (w.dim(1) != s.in_channels || w.dim(3) != s.kernel || s.kernel % 2 == 0)
    throw Error("conv2d: weight " + shape_string(w.shape()) + " incompatible with input " +
                shape_string(x.shape()));
  std::vector<Real> out(s.batch * s.out_channels * s.pixels());
  kernels::conv2d_forward(s, x.values().data(), w.values().data(), out.data());
  return record("conv2d", {s.batch, s.out_channels, s.height, s.width}, std::move(out), {x, w},
                [s](detail::Node& n) {
                  auto& nx = *n.inputs[0];
                  auto& nw = *n.inputs[1];
                  if (nx.requires_grad)
                    kernels::conv2d_backward_input(s, n.grad.data(), nw.value.data(),
                                                   nx.grad_buffer().data());
                  if (nw.requires_grad)
                    kernels::conv2d_backward_weight(s, nx.value.data(), n.grad.data(),
                                                    nw.grad_buffer().data());
                });
}

DiffArray avg_pool2(const DiffArray& x) {
  require_rank(x, 4, "avg_pool2");
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw Error("avg_pool2: odd spatial size " + shape_string(x.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  const auto xv = x.values();
  std::vector<Real> out(planes * oh * ow);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const Real* src = xv.data() + p * h * w + 2 * y * w + 2 * xx;
        out[(p * oh + y) * ow + xx] = Real(0.25) * (src[0] + src[1] + src[w] + src[w + 1]);
      }
  return record("avg_pool2", {x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                [planes, h, w, oh, ow](detail::Node& n) {
                  auto& in = *n.inputs[0];
                  if (!in.requires_grad) return;
                  auto& g = in.grad_buffer();
                  for (std::size_t p = 0; p < planes; ++p)
                    for (std::size_t y = 0; y < oh; ++y)
                      for (std::size_t xx = 0; xx < ow; ++xx) {
                        const Real d = Real(0.25) * n.grad[(p * oh + y) * ow + xx];
                        Real* dst = g.data() + p * h * w + 2 * y * w + 2 * xx;
                        dst[0] += d;
                        dst[1] += d;
                        dst[w] += d;
                        dst[w + 1] += d;
                      }
                });
}

DiffArray upsample_nearest2(const DiffArray& x) {
  require_rank(x, 4, "upsample_nearest2");
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t h = x.dim(2), w = x.dim(3);
  const std::size_t oh = 2 * h, ow = 2 * w;
  const auto xv = x.values();
  std::vector<Real> out(planes * oh * ow);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx)
        out[(p * oh + y) * ow + xx] = xv[(p * h + y / 2) * w + xx / 2];
  return record("upsample_nearest2", {x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                [planes, h, w, oh, ow](detail::Node& n) {
                  auto& in = *n.inputs[0];
                  if (!in.requires_grad) return;
                  auto& g = in.grad_buffer();
                  for (std::size_t p = 0; p < planes; ++p)
                    for (std::size_t y = 0; y < oh; ++y)
                      for (std::size_t xx = 0; xx < ow; ++xx)
                        g[(p * h + y / 2) * w + xx / 2] += n.grad[(p * oh + y) * ow + xx];
                });
}

DiffArray concat(const DiffArray& a, const DiffArray& b, std::size_t axis) {
  if (a.ndim() != b.ndim() || axis >= a.ndim()) throw Error("concat: rank mismatch");
  for (std::size_t i = 0; i < a.ndim(); ++i)
    if (i != axis && a.dim(i) != b.dim(i)) throw Error("concat: shape mismatch");
  const std::size_t na = a.dim(axis), nb = b.dim(axis);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a.dim(i);
  for (std::size_t i = axis + 1; i < a.ndim(); ++i) inner *= a.dim(i);
  Shape shape = a.shape();
  shape[axis] = na + nb;
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(outer * (na + nb) * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    Real* dst = out.data() + o * (na + nb) * inner;
    std::copy_n(av.data() + o * na * inner, na * inner, dst);
    std::copy_n(bv.data() + o * nb * inner, nb * inner, dst + na * inner);
  }
  return record("concat", std::move(shape), std::move(out), {a, b},
                [outer, inner, na, nb](detail::Node& n) {
                  auto& ia = *n.inputs[0];
                  auto& ib = *n.inputs[1];
                  for (std::size_t o = 0; o < outer; ++o) {
                    const Real* src = n.grad.data() + o * (na + nb) * inner;
                    if (ia.requires_grad) {
                      auto& g = ia.grad_buffer();
                      for (std::size_t i = 0; i < na * inner; ++i) g[o * na * inner + i] += src[i];
                    }
                    if (ib.requires_grad) {
                      auto& g = ib.grad_buffer();
                      for (std::size_t i = 0; i < nb * inner; ++i)
                        g[o * nb * inner + i] += src[na * inner + i];
                    }
                  }
                });
}

DiffArray channel_modulate(const DiffArray& x, const DiffArray& m) {
  require_rank(x, 4, "channel_modulate");
  require_rank(m, 2, "channel_modulate");
  const std::size_t planes = x.dim(0) * x.dim(1);
  if (m.dim(0) != x.dim(0) || m.dim(1) != x.dim(1))
    throw Error("channel_modulate: modulation " + shape_string(m.shape()) + " vs input " +
                shape_string(x.shape()));
  const std::size_t hw = x.dim(2) * x.dim(3);
  const auto xv = x.values();
  const auto mv = m.values();
  std::vector<Real> out(xv.size());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < hw; ++i) out[p * hw + i] = xv[p * hw + i] * mv[p];
  return record("channel_modulate", x.shape(), std::move(out), {x, m},
                [planes, hw](detail::Node& n) {
                  auto& nx = *n.inputs[0];
                  auto& nm = *n.inputs[1];
                  if (nx.requires_grad) {
                    auto& g = nx.grad_buffer();
                    for (std::size_t p = 0; p < planes; ++p)
                      for (std::size_t i = 0; i < hw; ++i)
                        g[p * hw + i] += n.grad[p * hw + i] * nm.value[p];
                  }
                  if (nm.requires_grad) {
                    auto& g = nm.grad_buffer();
                    for (std::size_t p = 0; p < planes; ++p) {
                      Real acc = 0;
                      for (std::size_t i = 0; i < hw; ++i)
                        acc += n.grad[p * hw + i] * nx.value[p * hw + i];
                      g[p] += acc;
                    }
                  }
                });
}

DiffArray image_to_rows(const DiffArray& x) {
  require_rank(x, 4, "image_to_rows");
  const std::size_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t p = 0; p < hw; ++p) out[(bi * hw + p) * c + ci] = xv[(bi * c + ci) * hw + p];
  return record("image_to_rows", {b * hw, c}, std::move(out), {x}, [b, c, hw](detail::Node& n) {
    auto& in = *n.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t bi = 0; bi < b; ++bi)
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t p = 0; p < hw; ++p) g[(bi * c + ci) * hw + p] += n.grad[(bi * hw + p) * c + ci];
  });
}

DiffArray rows_to_image(const DiffArray& rows, std::size_t batch, std::size_t height,
                        std::size_t width) {
  require_rank(rows, 2, "rows_to_image");
  const std::size_t hw = height * width;
  if (rows.dim(0) != batch * hw)
    throw Error("rows_to_image: " + std::to_string(rows.dim(0)) + " rows for a " +
                std::to_string(batch) + "x" + std::to_string(height) + "x" +
                std::to_string(width) + " grid");
  const std::size_t c = rows.dim(1);
  const auto rv = rows.values();
  std::vector<Real> out(rv.size());
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t p = 0; p < hw; ++p) out[(bi * c + ci) * hw + p] = rv[(bi * hw + p) * c + ci];
  return record("rows_to_image", {batch, c, height, width}, std::move(out), {rows},
                [batch, c, hw](detail::Node& n) {
                  auto& in = *n.inputs[0];
                  if (!in.requires_grad) return;
                  auto& g = in.grad_buffer();
                  for (std::size_t bi = 0; bi < batch; ++bi)
                    for (std::size_t ci = 0; ci < c; ++ci)
                      for (std::size_t p = 0; p < hw; ++p)
                        g[(bi * hw + p) * c + ci] += n.grad[(bi * c + ci) * hw + p];
                });
}

DiffArray gather_rows(const DiffArray& x, const std::vector<std::uint32_t>& index) {
  require_rank(x, 2, "gather_rows");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  const auto xv = x.values();
  std::vector<Real> out(index.size() * d);
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= rows) throw Error("gather_rows: index out of range");
    std::copy_n(xv.data() + index[e] * d, d, out.data() + e * d);
  }
  return record("gather_rows", {index.size(), d}, std::move(out), {x}, [index, d](detail::Node& n) {
    auto& in = *n.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t e = 0; e < index.size(); ++e)
      for (std::size_t c = 0; c < d; ++c) g[index[e] * d + c] += n.grad[e * d + c];
  });
}

DiffArray segment_sum(const DiffArray& rows, const std::vector<std::size_t>& offsets,
                      const std::vector<Real>& row_scale) {
  require_rank(rows, 2, "segment_sum");
  if (offsets.empty() || offsets.size() != row_scale.size() + 1 || offsets.back() != rows.dim(0))
    throw Error("segment_sum: offsets do not cover the input rows");
  const std::size_t segments = row_scale.size();
  const std::size_t d = rows.dim(1);
  const auto rv = rows.values();
  std::vector<Real> out(segments * d, Real(0));
  const long nseg = static_cast<long>(segments);
#pragma omp parallel for schedule(static) if (rows.dim(0) * d > 65536)
  for (long si = 0; si < nseg; ++si) {
    const auto s = static_cast<std::size_t>(si);
    Real* dst = out.data() + s * d;
    for (std::size_t e = offsets[s]; e < offsets[s + 1]; ++e)
      for (std::size_t c = 0; c < d; ++c) dst[c] += rv[e * d + c];
    for (std::size_t c = 0; c < d; ++c) dst[c] *= row_scale[s];
  }
  return record("segment_sum", {segments, d}, std::move(out), {rows},
                [offsets, row_scale, d](detail::Node& n) {
                  auto& in = *n.inputs[0];
                  if (!in.requires_grad) return;
                  auto& g = in.grad_buffer();
                  for (std::size_t s = 0; s < row_scale.size(); ++s)
                    for (std::size_t e = offsets[s]; e < offsets[s + 1]; ++e)
                      for (std::size_t c = 0; c < d; ++c) g[e * d + c] += row_scale[s] * n.grad[s * d + c];
                });
}

DiffArray add_where(const DiffArray& a, const DiffArray& b,
                    const std::vector<unsigned char>& use_b) {
  require_same(a, b, "add_where");
  require_rank(a, 2, "add_where");
  if (a.dim(0) != use_b.size()) throw Error("add_where: one flag per row required");
  const std::size_t d = a.dim(1);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(av.begin(), av.end());
  for (std::size_t r = 0; r < use_b.size(); ++r)
    if (use_b[r])
      for (std::size_t c = 0; c < d; ++c) out[r * d + c] += bv[r * d + c];
  return record("add_where", a.shape(), std::move(out), {a, b}, [use_b, d](detail::Node& n) {
    add_into(*n.inputs[0], [&](std::size_t i) { return n.grad[i]; });
    add_into(*n.inputs[1], [&](std::size_t i) { return use_b[i / d] ? n.grad[i] : Real(0); });
  });
}

DiffArray sum(const DiffArray& x) {
  Real acc = 0;
  for (Real v : x.values()) acc += v;
  return record("sum", {1}, {acc}, {x}, [](detail::Node& n) {
    add_into(*n.inputs[0], [&](std::size_t) { return n.grad[0]; });
  });
}

DiffArray weighted_mse(const DiffArray& pred, const DiffArray& target,
                       const std::vector<Real>& weight) {
  require_same(pred, target, "weighted_mse");
  if (pred.ndim() < 1 || pred.dim(0) != weight.size() || weight.empty())
    throw Error("weighted_mse: one weight per batch element required");
  const std::size_t batch = weight.size();
  const std::size_t per = pred.numel() / batch;
  const auto pv = pred.values();
  const auto tv = target.values();
  Real total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    Real acc = 0;
    for (std::size_t i = 0; i < per; ++i) {
      const Real d = pv[b * per + i] - tv[b * per + i];
      acc += d * d;
    }
    total += weight[b] * acc / Real(per);
  }
  total /= Real(batch);
  return record("weighted_mse", {1}, {total}, {pred, target}, [weight, per, batch](detail::Node& n) {
    auto& np = *n.inputs[0];
    auto& nt = *n.inputs[1];
    const Real g0 = n.grad[0];
    auto coeff = [&](std::size_t i) {
      return g0 * Real(2) * weight[i / per] / Real(per * batch) * (np.value[i] - nt.value[i]);
    };
    add_into(np, [&](std::size_t i) { return coeff(i); });
    add_into(nt, [&](std::size_t i) { return -coeff(i); });
  });
}

}  // namespace hig::nn
