// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hig/graph/hetero_graph.hpp"
#include "hig/io/kv_config.hpp"
#include "hig/model/denoiser.hpp"

namespace hig::model {

Real sample_sigma(Rng& rng, const NoiseConfig& cfg);

// alpha_ref / sqrt(max(step / t_ref, 1))
Real learning_rate(std::size_t step, Real alpha_ref, Real t_ref);

struct LossSample {
  DiffArray loss;
  std::vector<Real> sigma;
  std::vector<double> probes;
};

// Draws one sigma and noise per batch element and returns
// (1/B) sum_b lambda(sigma_b) mean((D(x0 + n; sigma_b) - x0)^2).
// A non-finite value raises an Error naming the sigmas involved.
LossSample denoising_loss(const Denoiser& model, const DiffArray& x0,
                          const graph::HeteroImageGraph* graph, Rng& rng, const NoiseConfig& cfg);

enum class Phase { kBase, kControl };
Phase parse_phase(const std::string& name);
const char* phase_name(Phase phase);

struct TrainConfig {
  Real alpha_ref = Real(0.01);
  Real t_ref = Real(10000);
  std::size_t batch = 16;
  std::size_t steps = 3000;
  std::uint64_t seed = 0;
  Real mask_dropout = Real(0.5);
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.99);
  Real adam_eps = Real(1e-8);
  // Rescale raw weight rows to norm sqrt(fan_in) after every step.
  bool renormalize = true;
  NoiseConfig noise;
};

// Key/value round trip; unknown keys are rejected.
void apply_train_keys(TrainConfig& cfg, io::KeyValues& kv);
void apply_model_keys(ModelConfig& cfg, io::KeyValues& kv);
io::KeyValues train_keys(const TrainConfig& cfg);
io::KeyValues model_keys(const ModelConfig& cfg);

// Images in model space, (C, H, W) each, with one graph per image.
struct TrainingSet {
  std::vector<std::vector<Real>> images;
  std::vector<graph::HeteroImageGraph> graphs;
  std::size_t channels = 3, height = 16, width = 16;
};

struct StepMetrics {
  std::size_t step;
  double loss;
  double lr;
  std::vector<double> probes;
};

struct TrainResult {
  std::vector<StepMetrics> history;
  double seconds = 0;
};

// Writes `step,loss,lr,probe_rms_0..` rows to `csv` as training runs.
void write_metrics_header(std::ostream& csv);
void write_metrics_row(std::ostream& csv, const StepMetrics& m);

// Base phase trains the backbone alone; control phase freezes it and trains
// the branch. Divergence raises an Error carrying the last probe values.
TrainResult train(Denoiser& model, const TrainingSet& data, const TrainConfig& cfg, Phase phase,
                  std::ostream* csv = nullptr,
                  const std::function<void(const StepMetrics&)>& on_step = {});

// 1 - mean(last `window` losses) / mean(losses at steps 1..window).
double loss_reduction(const std::vector<StepMetrics>& history, std::size_t window = 50);

}  // namespace hig::model
