// SPDX-License-Identifier: Apache-2.0
#include "hig/core/mp_ops.hpp"

#include <cmath>
#include <numbers>

namespace hig::mp {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double integrate_silu_second_moment() {
  // Composite Simpson over [-16, 16] with 2^16 intervals; the Gaussian tail
  // beyond 16 contributes below 1e-50.
  constexpr int kIntervals = 1 << 16;
  constexpr double lo = -16.0;
  constexpr double hi = 16.0;
  const double h = (hi - lo) / kIntervals;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto f = [&](double z) {
    const double s = z * sigmoid(z);
    return s * s * std::exp(-0.5 * z * z) * inv_sqrt_2pi;
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < kIntervals; ++i) acc += f(lo + i * h) * ((i % 2) ? 4.0 : 2.0);
  return acc * h / 3.0;
}

void check_same_shape(const DiffArray& a, const DiffArray& b, const char* op) {
  if (a.shape() != b.shape())
    throw Error(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                shape_string(b.shape()));
}

}  // namespace

Real silu_normalizer() {
  static const Real c = static_cast<Real>(std::sqrt(integrate_silu_second_moment()));
  return c;
}

DiffArray forced_weight_norm(const DiffArray& w, Real eps) {
  if (w.ndim() < 1 || w.numel() == 0) throw Error("forced_weight_norm: empty weight");
  const std::size_t rows = w.ndim() == 1 ? 1 : w.dim(0);  // a vector is a single row
  const std::size_t cols = w.numel() / rows;
  const auto in = w.values();
  std::vector<Real> out(in.size());
  std::vector<Real> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    Real sq = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      const Real v = in[r * cols + c];
      if (!std::isfinite(v)) throw Error("non-finite weight");
      sq += v * v;
    }
    const Real n = std::sqrt(sq);
    if (!(n + eps > 0)) throw Error("forced_weight_norm: zero-norm row with eps = 0");
    norms[r] = n;
    const Real inv = Real(1) / (n + eps);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = in[r * cols + c] * inv;
  }
  return record("forced_weight_norm", w.shape(), std::move(out), {w},
                [rows, cols, eps, norms = std::move(norms)](detail::Node& node) {
                  auto& src = *node.inputs[0];
                  if (!src.requires_grad) return;
                  auto& g = src.grad_buffer();
                  for (std::size_t r = 0; r < rows; ++r) {
                    const Real n = norms[r];
                    const Real inv = Real(1) / (n + eps);
                    const Real* wr = src.value.data() + r * cols;
                    const Real* gr = node.grad.data() + r * cols;
                    Real dot = 0;
                    for (std::size_t c = 0; c < cols; ++c) dot += wr[c] * gr[c];
                    const Real radial = n > 0 ? dot / (n * (n + eps) * (n + eps)) : Real(0);
                    for (std::size_t c = 0; c < cols; ++c)
                      g[r * cols + c] += gr[c] * inv - wr[c] * radial;
                  }
                });
}

DiffArray mp_sum(const DiffArray& a, const DiffArray& b, Real t) {
  check_same_shape(a, b, "mp_sum");
  const Real denom = std::sqrt((1 - t) * (1 - t) + t * t);
  const Real wa = (1 - t) / denom;
  const Real wb = t / denom;
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ((1 - t) * av[i] + t * bv[i]) / denom;
  return record("mp_sum", a.shape(), std::move(out), {a, b}, [wa, wb](detail::Node& node) {
    for (int k = 0; k < 2; ++k) {
      auto& in = *node.inputs[k];
      if (!in.requires_grad) continue;
      const Real s = k == 0 ? wa : wb;
      auto& g = in.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * node.grad[i];
    }
  });
}

DiffArray mp_sum_gated(const DiffArray& a, const DiffArray& b, const DiffArray& gain,
                       Real t_max) {
  check_same_shape(a, b, "mp_sum_gated");
  if (gain.numel() != 1) throw Error("mp_sum_gated: gain must be a scalar");
  const Real t = t_max * gain.item();
  const Real denom = std::sqrt((1 - t) * (1 - t) + t * t);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ((1 - t) * av[i] + t * bv[i]) / denom;
  return record(
      "mp_sum_gated", a.shape(), std::move(out), {a, b, gain},
      [t, t_max, denom](detail::Node& node) {
        const Real wa = (1 - t) / denom;
        const Real wb = t / denom;
        auto& na = *node.inputs[0];
        auto& nb = *node.inputs[1];
        auto& ng = *node.inputs[2];
        const std::size_t n = node.grad.size();
        if (na.requires_grad) {
          auto& g = na.grad_buffer();
          for (std::size_t i = 0; i < n; ++i) g[i] += wa * node.grad[i];
        }
        if (nb.requires_grad) {
          auto& g = nb.grad_buffer();
          for (std::size_t i = 0; i < n; ++i) g[i] += wb * node.grad[i];
        }
        if (ng.requires_grad) {
          // d out / d t = (b - a)/s - out (2t - 1)/s^2
          const Real ds = (2 * t - 1) / (denom * denom);
          Real acc = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const Real d = (nb.value[i] - na.value[i]) / denom - node.value[i] * ds;
            acc += node.grad[i] * d;
          }
          ng.grad_buffer()[0] += t_max * acc;
        }
      });
}

DiffArray mp_sum_where(const DiffArray& a, const DiffArray& b, Real t,
                       const std::vector<unsigned char>& use_b) {
  check_same_shape(a, b, "mp_sum_where");
  if (a.ndim() != 2 || a.dim(0) != use_b.size())
    throw Error("mp_sum_where: expects (rows, d) arrays and one flag per row");
  const std::size_t rows = a.dim(0);
  const std::size_t d = a.dim(1);
  const Real denom = std::sqrt((1 - t) * (1 - t) + t * t);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(av.begin(), av.end());
  for (std::size_t r = 0; r < rows; ++r) {
    if (!use_b[r]) continue;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t i = r * d + c;
      out[i] = ((1 - t) * av[i] + t * bv[i]) / denom;
    }
  }
  return record("mp_sum_where", a.shape(), std::move(out), {a, b},
                [use_b, rows, d, t, denom](detail::Node& node) {
                  const Real wa = (1 - t) / denom;
                  const Real wb = t / denom;
                  auto& na = *node.inputs[0];
                  auto& nb = *node.inputs[1];
                  for (std::size_t r = 0; r < rows; ++r) {
                    const Real sa = use_b[r] ? wa : Real(1);
                    for (std::size_t c = 0; c < d; ++c) {
                      const std::size_t i = r * d + c;
                      if (na.requires_grad) na.grad_buffer()[i] += sa * node.grad[i];
                      if (nb.requires_grad && use_b[r]) nb.grad_buffer()[i] += wb * node.grad[i];
                    }
                  }
                });
}

DiffArray mp_cat(const DiffArray& a, const DiffArray& b, Real t, std::size_t axis) {
  if (a.numel() == 0 || b.numel() == 0) throw Error("mp_cat: empty operand");
  if (a.ndim() != b.ndim() || axis >= a.ndim()) throw Error("mp_cat: rank mismatch");
  for (std::size_t i = 0; i < a.ndim(); ++i) {
    if (i != axis && a.dim(i) != b.dim(i))
      throw Error("mp_cat: shape mismatch " + shape_string(a.shape()) + " vs " +
                  shape_string(b.shape()));
  }
  const std::size_t na = a.dim(axis);
  const std::size_t nb = b.dim(axis);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a.dim(i);
  for (std::size_t i = axis + 1; i < a.ndim(); ++i) inner *= a.dim(i);
  const Real overall = std::sqrt(Real(na + nb) / ((1 - t) * (1 - t) + t * t));
  const Real sa = overall * (1 - t) / std::sqrt(Real(na));
  const Real sb = overall * t / std::sqrt(Real(nb));
  Shape shape = a.shape();
  shape[axis] = na + nb;
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(outer * (na + nb) * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    Real* dst = out.data() + o * (na + nb) * inner;
    for (std::size_t i = 0; i < na * inner; ++i) dst[i] = sa * av[o * na * inner + i];
    for (std::size_t i = 0; i < nb * inner; ++i) dst[na * inner + i] = sb * bv[o * nb * inner + i];
  }
  return record("mp_cat", std::move(shape), std::move(out), {a, b},
                [outer, inner, na, nb, sa, sb](detail::Node& node) {
                  auto& ia = *node.inputs[0];
                  auto& ib = *node.inputs[1];
                  for (std::size_t o = 0; o < outer; ++o) {
                    const Real* src = node.grad.data() + o * (na + nb) * inner;
                    if (ia.requires_grad) {
                      auto& g = ia.grad_buffer();
                      for (std::size_t i = 0; i < na * inner; ++i) g[o * na * inner + i] += sa * src[i];
                    }
                    if (ib.requires_grad) {
                      auto& g = ib.grad_buffer();
                      for (std::size_t i = 0; i < nb * inner; ++i)
                        g[o * nb * inner + i] += sb * src[na * inner + i];
                    }
                  }
                });
}

DiffArray mp_silu(const DiffArray& x) {
  const Real inv_c = Real(1) / silu_normalizer();
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Real s = Real(1) / (Real(1) + std::exp(-xv[i]));
    out[i] = xv[i] * s * inv_c;
  }
  return record("mp_silu", x.shape(), std::move(out), {x}, [inv_c](detail::Node& node) {
    auto& in = *node.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Real v = in.value[i];
      const Real s = Real(1) / (Real(1) + std::exp(-v));
      g[i] += node.grad[i] * (s + v * s * (1 - s)) * inv_c;
    }
  });
}

DiffArray pixel_norm(const DiffArray& x, Real eps, std::size_t axis) {
  if (axis >= x.ndim()) throw Error("pixel_norm: axis out of range");
  const std::size_t d = x.dim(axis);
  if (d == 0) throw Error("pixel_norm: empty feature axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  std::vector<Real> inv_rms(outer * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      Real sq = 0;
      for (std::size_t c = 0; c < d; ++c) {
        const Real v = xv[(o * d + c) * inner + in];
        sq += v * v;
      }
      const Real m = sq / Real(d) + eps;
      const Real r = m > 0 ? Real(1) / std::sqrt(m) : Real(0);
      inv_rms[o * inner + in] = r;
      for (std::size_t c = 0; c < d; ++c) {
        const std::size_t i = (o * d + c) * inner + in;
        out[i] = xv[i] * r;
      }
    }
  return record("pixel_norm", x.shape(), std::move(out), {x},
                [outer, inner, d, inv_rms = std::move(inv_rms)](detail::Node& node) {
                  auto& src = *node.inputs[0];
                  if (!src.requires_grad) return;
                  auto& g = src.grad_buffer();
                  for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t in = 0; in < inner; ++in) {
                      const Real r = inv_rms[o * inner + in];
                      Real dot = 0;
                      for (std::size_t c = 0; c < d; ++c) {
                        const std::size_t i = (o * d + c) * inner + in;
                        dot += node.grad[i] * src.value[i];
                      }
                      const Real k = r * r * r * dot / Real(d);
                      for (std::size_t c = 0; c < d; ++c) {
                        const std::size_t i = (o * d + c) * inner + in;
                        g[i] += r * node.grad[i] - k * src.value[i];
                      }
                    }
                });
}

DiffArray normalized_sum(const std::vector<DiffArray>& arrays) {
  if (arrays.empty()) throw Error("normalized_sum: empty list");
  const Shape& shape = arrays.front().shape();
  std::vector<Real> out(arrays.front().numel(), Real(0));
  for (const auto& a : arrays) {
    if (a.shape() != shape) throw Error("normalized_sum: shape mismatch");
    const auto v = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  const Real scale = Real(1) / std::sqrt(Real(arrays.size()));
  for (auto& v : out) v *= scale;
  return record("normalized_sum", shape, std::move(out), arrays, [scale](detail::Node& node) {
    for (auto& in : node.inputs) {
      if (!in->requires_grad) continue;
      auto& g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * node.grad[i];
    }
  });
}

DiffArray zero_gain(const DiffArray& x, const DiffArray& gain) {
  if (gain.numel() != 1) throw Error("zero_gain: gain must be a scalar");
  const Real g = gain.item();
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g * xv[i];
  return record("zero_gain", x.shape(), std::move(out), {x, gain}, [g](detail::Node& node) {
    auto& nx = *node.inputs[0];
    auto& ng = *node.inputs[1];
    if (nx.requires_grad) {
      auto& gx = nx.grad_buffer();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * node.grad[i];
    }
    if (ng.requires_grad) {
      Real acc = 0;
      for (std::size_t i = 0; i < node.grad.size(); ++i) acc += node.grad[i] * nx.value[i];
      ng.grad_buffer()[0] += acc;
    }
  });
}

}  // namespace hig::mp
