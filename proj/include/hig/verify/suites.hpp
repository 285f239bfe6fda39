// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hig/gnn/hig_conv.hpp"
#include "hig/graph/annotation.hpp"
#include "hig/model/train.hpp"
#include "hig/sampling/sampler.hpp"
#include "hig/synth/scene.hpp"
#include "hig/verify/harness.hpp"

namespace hig::verify {

// Random bipartite conditioning graph on a side x side grid: every image node
// receives between min_degree and max_degree distinct instance neighbours.
struct MagnitudeHarness {
  std::size_t side = 32;
  std::size_t sources = 1024;
  std::size_t channels = 32;
  std::size_t min_degree = 4;
  std::size_t max_degree = 256;
  std::uint64_t seed = 1;
};

// Per-block second moment of the image-node features (index 0 is the input
// after projection), for unit-variance Gaussian inputs.
std::vector<double> magnitude_trajectory(const MagnitudeHarness& h, gnn::Variant variant, std::size_t blocks);

// Random annotation with arbitrary labels, attributes, relations and a
// random full mask; independent of the synthetic scene renderer.
graph::SceneAnnotation random_annotation(Rng& rng, std::size_t height, std::size_t width);

struct PipelineConfig {
  std::size_t train_scenes = 2000;
  std::size_t eval_scenes = 64;
  synth::SceneConfig scenes;
  model::ModelConfig model;
  model::TrainConfig base;
  model::TrainConfig control;
  sampling::SamplerConfig sampler;
  std::size_t sample_batch = 16;
  bool depth2_variant = true;
  std::uint64_t seed = 7;

  static PipelineConfig desk_scale();
};

struct EvalResult {
  double fidelity = 0;
  double layout_iou = 0;
  double relations = 0;
  std::size_t relation_pairs = 0;
  double seconds = 0;
};

struct PipelineResult {
  model::TrainResult base, control, depth2;
  double base_reduction = 0, control_reduction = 0;
  EvalResult eval, depth2_eval;
};

// Generates data, trains both phases, samples held-out layouts and scores
// them. `log` receives progress lines when non-null.
PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream* log);

// Samples the held-out layouts with primary/guide and scores them.
EvalResult evaluate(const model::Denoiser& primary, const model::Denoiser& guide,
                    const std::vector<synth::Scene>& layouts, const PipelineConfig& cfg,
                    std::vector<io::Image>* samples = nullptr);

Report suite_mp_ops();
Report suite_magnitude();
Report suite_gradcheck();
Report suite_sampler_oracle();
Report suite_graph_oracle();
Report suite_pipeline(const PipelineConfig& cfg, std::ostream* log);

std::vector<std::string> suite_names();
// Runs a named suite ("all" runs every suite including the pipeline).
Report run_suite(const std::string& name, const PipelineConfig& cfg, std::ostream* log);

}  // namespace hig::verify
