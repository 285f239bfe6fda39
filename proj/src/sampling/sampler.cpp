// SPDX-License-Identifier: Apache-2.0
#include "hig/sampling/sampler.hpp"

#include <cmath>
#include <memory>

#include "hig/core/random.hpp"
#include "hig/gnn/hignn.hpp"

namespace hig::sampling {

void SamplerConfig::validate() const {
  if (steps < 2) throw Error("sampler: need at least 2 steps");
  if (!(sigma_min > 0) || !(sigma_min < sigma_max)) throw Error("sampler: need 0 < sigma_min < sigma_max");
  if (!(rho > 0)) throw Error("sampler: rho must be positive");
  if (guidance < 1) throw Error("sampler: guidance weight must be at least 1");
}

std::vector<Real> sigma_steps(const SamplerConfig& cfg) {
  cfg.validate();
  const Real hi = std::pow(cfg.sigma_max, 1 / cfg.rho);
  const Real lo = std::pow(cfg.sigma_min, 1 / cfg.rho);
  std::vector<Real> s;
  for (std::size_t i = 0; i < cfg.steps; ++i) {
    const Real f = static_cast<Real>(i) / static_cast<Real>(cfg.steps - 1);
    s.push_back(std::pow(hi + f * (lo - hi), cfg.rho));
  }
  s.front() = cfg.sigma_max;
  s.back() = cfg.sigma_min;
  s.push_back(0);
  return s;
}

std::vector<Real> autoguided(const std::vector<Real>& primary, const std::vector<Real>& guide, Real w) {
  if (primary.size() != guide.size()) throw Error("autoguided: shape mismatch");
  // g + (p - g) need not round back to p.
  if (w == 1) return primary;
  std::vector<Real> out(primary.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = guide[i] + w * (primary[i] - guide[i]);
  return out;
}

std::vector<Real> heun(const DenoiseFn& denoise, std::vector<Real> x, const std::vector<Real>& sigmas) {
  const auto n = x.size();
  auto check = [](const std::vector<Real>& v, std::size_t step) {
    for (Real e : v)
      if (!std::isfinite(e)) throw Error("sampler: non-finite state at step " + std::to_string(step));
  };
  for (std::size_t i = 0; i + 1 < sigmas.size(); ++i) {
    const Real s = sigmas[i], s_next = sigmas[i + 1];
    const auto d0 = denoise(x, s);
    if (d0.size() != n) throw Error("sampler: denoiser changed the state size");
    std::vector<Real> slope(n), proposal(n);
    for (std::size_t k = 0; k < n; ++k) {
      slope[k] = (x[k] - d0[k]) / s;
      proposal[k] = x[k] + (s_next - s) * slope[k];
    }
    if (s_next > 0) {
      const auto d1 = denoise(proposal, s_next);
      for (std::size_t k = 0; k < n; ++k) {
        const Real slope1 = (proposal[k] - d1[k]) / s_next;
        proposal[k] = x[k] + (s_next - s) * Real(0.5) * (slope[k] + slope1);
      }
    }
    x = std::move(proposal);
    check(x, i);
  }
  return x;
}

std::vector<Real> sample(const DenoiseFn& denoise, std::size_t numel, const SamplerConfig& cfg) {
  const auto sigmas = sigma_steps(cfg);
  Rng rng(cfg.seed);
  auto x = rng.normal_vector(numel);
  for (auto& v : x) v *= sigmas.front();
  return heun(denoise, std::move(x), sigmas);
}

DenoiseFn guided_denoiser(const model::Denoiser& primary, const model::Denoiser& guide,
                          const graph::HeteroImageGraph& graph, Shape shape, Real w) {
  auto inputs = std::make_shared<gnn::GraphInputs>(gnn::prepare_inputs(graph));
  return [&primary, &guide, &graph, inputs, shape, w](const std::vector<Real>& x, Real sigma) {
    NoGradGuard no_grad;
    auto xa = DiffArray::constant(shape, x);
    const std::vector<Real> sig(shape[0], sigma);
    auto dp = primary.denoise(xa, sig, &graph, inputs.get());
    auto dg = guide.denoise(xa, sig);
    return autoguided({dp.values().begin(), dp.values().end()}, {dg.values().begin(), dg.values().end()}, w);
  };
}

DenoiseFn plain_denoiser(const model::Denoiser& model, const graph::HeteroImageGraph* graph, Shape shape) {
  std::shared_ptr<gnn::GraphInputs> inputs;
  if (graph) inputs = std::make_shared<gnn::GraphInputs>(gnn::prepare_inputs(*graph));
  return [&model, graph, inputs, shape](const std::vector<Real>& x, Real sigma) {
    NoGradGuard no_grad;
    auto d = model.denoise(DiffArray::constant(shape, x), std::vector<Real>(shape[0], sigma), graph,
                           inputs.get());
    return std::vector<Real>(d.values().begin(), d.values().end());
  };
}

}  // namespace hig::sampling
