// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "hig/gnn/hignn.hpp"
#include "hig/graph/hetero_graph.hpp"
#include "hig/model/params.hpp"

namespace hig::model {

struct NoiseConfig {
  Real p_mean = Real(-0.4);
  Real p_std = Real(1.0);
  Real sigma_data = Real(0.5);
};

enum class InjectionVariant { kMagnitudePreserving, kNaive };

struct ModelConfig {
  std::size_t image_channels = 3;
  std::size_t resolution = 16;
  std::size_t channels = 32;
  std::size_t blocks_per_stage = 2;
  std::size_t fourier_dim = 32;
  std::size_t emb_dim = 64;
  Real sigma_data = Real(0.5);
  Real t_skip = Real(0.3);         // residual blend inside every block
  Real t_decoder_cat = Real(0.5);  // decoder skip concatenation
  Real t_inject = Real(0.3);       // control injection blend at gain 1
  Real t_caption = Real(0.5);      // caption blend at gain 1
  Real weight_eps = mp::kDefaultWeightEpsilon;
  bool caption_conditioning = false;
  std::size_t caption_dim = 32;
  InjectionVariant injection = InjectionVariant::kMagnitudePreserving;
  gnn::HIGnnConfig gnn;

  // Fills gnn widths from the backbone and the given schema.
  static ModelConfig standard(const std::vector<graph::MetaPath>& schema, std::size_t feature_dim = 32);
};

struct Preconditioning {
  Real c_skip, c_out, c_in, c_noise;
};

// EDM constants; sigma must be positive.
Preconditioning precondition(Real sigma, Real sigma_data);
// (sigma^2 + sigma_data^2) / (sigma * sigma_data)^2
Real loss_weight(Real sigma, Real sigma_data);

struct BlockParams {
  DiffArray conv_a, conv_b;  // (C, C, 3, 3)
  DiffArray emb_w;           // (C, emb_dim)
  DiffArray emb_gain;        // scalar, starts at 0
};

struct EmbeddingParams {
  DiffArray w0;  // (emb_dim, fourier_dim)
  DiffArray w1;  // (emb_dim, emb_dim)
  DiffArray caption_w;     // (emb_dim, caption_dim)
  DiffArray caption_gain;  // scalar, starts at 0
};

struct EncoderParams {
  DiffArray conv_in;  // (C, image_channels + 1, 3, 3)
  std::vector<BlockParams> stage0, stage1;
};

struct BaseParams {
  EmbeddingParams emb;
  EncoderParams enc;
  std::vector<BlockParams> dec1, dec0;
  DiffArray skip_proj;  // (C, 2C, 1, 1)
  DiffArray conv_out;   // (image_channels, C, 3, 3)
  DiffArray out_gain;   // scalar, starts at 0
};

// Trainable encoder copy with its own embedding network, the HIGnn after the
// input convolution, and one zero-gain 1x1 projection per encoder stage.
struct ControlParams {
  EmbeddingParams emb;
  EncoderParams enc;
  gnn::HIGnnParams gnn;
  std::vector<DiffArray> inject_proj;  // (C, C, 1, 1)
  std::vector<DiffArray> inject_gain;  // scalar, start at 0
};

inline constexpr std::size_t kInjectionPoints = 2;

class Denoiser {
 public:
  Denoiser(ModelConfig cfg, std::uint64_t seed);

  // Creates the control branch from copies of the current base weights.
  void add_control(std::uint64_t seed);
  bool has_control() const { return control_.has_value(); }
  const ModelConfig& config() const { return cfg_; }

  NamedParams base_parameters() const;
  NamedParams control_parameters() const;
  // Freezes or unfreezes a parameter group (leaves only).
  void set_base_trainable(bool flag);
  void set_control_trainable(bool flag);

  // D(x; sigma, c). x: (B, C, H, W); one sigma per batch element. A null
  // graph runs the backbone alone. `probes` receives the RMS of the signal
  // at every injection point: the projected control features when a graph
  // is given, else the backbone features there.
  DiffArray denoise(const DiffArray& x, const std::vector<Real>& sigma,
                    const graph::HeteroImageGraph* graph = nullptr,
                    const gnn::GraphInputs* inputs = nullptr,
                    std::vector<double>* probes = nullptr) const;

  // Raw network F(c_in x, c_noise) without preconditioning.
  DiffArray raw_forward(const DiffArray& x_in, const std::vector<Real>& c_noise,
                        const graph::HeteroImageGraph* graph, const gnn::GraphInputs* inputs,
                        std::vector<double>* probes) const;

 private:
  DiffArray embedding(const EmbeddingParams& p, const std::vector<Real>& c_noise,
                      const graph::HeteroImageGraph* graph) const;
  DiffArray block(const BlockParams& p, const DiffArray& x, const DiffArray& emb) const;
  DiffArray inject(std::size_t k, const DiffArray& base, const DiffArray& control) const;

  ModelConfig cfg_;
  BaseParams base_;
  std::optional<ControlParams> control_;
  std::vector<Real> fourier_freq_, fourier_phase_;
};

}  // namespace hig::model
