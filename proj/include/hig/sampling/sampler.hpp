// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "hig/core/diff_array.hpp"
#include "hig/graph/hetero_graph.hpp"
#include "hig/model/denoiser.hpp"

namespace hig::sampling {

struct SamplerConfig {
  std::size_t steps = 32;
  Real sigma_min = Real(0.002);
  Real sigma_max = Real(80);
  Real rho = Real(7);
  Real guidance = Real(1.8);
  std::uint64_t seed = 0;

  void validate() const;
};

// sigma_0 > ... > sigma_{N-1} followed by a terminal 0.
std::vector<Real> sigma_steps(const SamplerConfig& cfg);

// Flat denoiser: state (same layout as the sampled array) and noise level.
using DenoiseFn = std::function<std::vector<Real>(const std::vector<Real>& x, Real sigma)>;

// guide + w (primary - guide), elementwise.
std::vector<Real> autoguided(const std::vector<Real>& primary, const std::vector<Real>& guide, Real w);

// Heun integration of dx/dsigma = (x - D(x; sigma)) / sigma along `sigmas`,
// without a correction on the final step into sigma = 0.
std::vector<Real> heun(const DenoiseFn& denoise, std::vector<Real> x, const std::vector<Real>& sigmas);

// Starts from N(0, sigma_0^2 I) drawn from cfg.seed.
std::vector<Real> sample(const DenoiseFn& denoise, std::size_t numel, const SamplerConfig& cfg);

// Autoguided denoiser for a batch: `primary` sees the graph, `guide` does not.
// Both run without gradient recording.
DenoiseFn guided_denoiser(const model::Denoiser& primary, const model::Denoiser& guide,
                          const graph::HeteroImageGraph& graph, Shape shape, Real w);

// Single-model denoiser, conditioned when `graph` is non-null.
DenoiseFn plain_denoiser(const model::Denoiser& model, const graph::HeteroImageGraph* graph, Shape shape);

}  // namespace hig::sampling
