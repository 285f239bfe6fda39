// SPDX-License-Identifier: Apache-2.0
#include "hig/model/denoiser.hpp"

#include <cmath>
#include <numbers>

#include "hig/core/mp_ops.hpp"
#include "hig/core/nn_ops.hpp"

namespace hig::model {
namespace {

constexpr std::uint64_t kFourierSeed = 0x46'6f'75'72'69'65'72ull;

DiffArray clone_parameter(const DiffArray& p) {
  return DiffArray::parameter(p.shape(), std::vector<Real>(p.values().begin(), p.values().end()));
}

BlockParams clone(const BlockParams& b) {
  return {clone_parameter(b.conv_a), clone_parameter(b.conv_b), clone_parameter(b.emb_w),
          clone_parameter(b.emb_gain)};
}

EmbeddingParams clone(const EmbeddingParams& e) {
  return {clone_parameter(e.w0), clone_parameter(e.w1), clone_parameter(e.caption_w),
          clone_parameter(e.caption_gain)};
}

EncoderParams clone(const EncoderParams& e) {
  EncoderParams out;
  out.conv_in = clone_parameter(e.conv_in);
  for (const auto& b : e.stage0) out.stage0.push_back(clone(b));
  for (const auto& b : e.stage1) out.stage1.push_back(clone(b));
  return out;
}

BlockParams init_block(const ModelConfig& cfg, Rng& rng) {
  const auto C = cfg.channels;
  return {init_weight({C, C, 3, 3}, rng), init_weight({C, C, 3, 3}, rng),
          init_weight({C, cfg.emb_dim}, rng), DiffArray::parameter({1}, {Real(0)})};
}

std::vector<BlockParams> init_stage(const ModelConfig& cfg, Rng& rng) {
  std::vector<BlockParams> s;
  for (std::size_t i = 0; i < cfg.blocks_per_stage; ++i) s.push_back(init_block(cfg, rng));
  return s;
}

void collect_block(const std::string& prefix, const BlockParams& b, NamedParams& out) {
  out.emplace_back(prefix + "conv_a", b.conv_a);
  out.emplace_back(prefix + "conv_b", b.conv_b);
  out.emplace_back(prefix + "emb_w", b.emb_w);
  out.emplace_back(prefix + "emb_gain", b.emb_gain);
}

void collect_stage(const std::string& prefix, const std::vector<BlockParams>& s, NamedParams& out) {
  for (std::size_t i = 0; i < s.size(); ++i) collect_block(prefix + std::to_string(i) + ".", s[i], out);
}

void collect_embedding(const std::string& prefix, const EmbeddingParams& e, NamedParams& out) {
  out.emplace_back(prefix + "w0", e.w0);
  out.emplace_back(prefix + "w1", e.w1);
  out.emplace_back(prefix + "caption_w", e.caption_w);
  out.emplace_back(prefix + "caption_gain", e.caption_gain);
}

void collect_encoder(const std::string& prefix, const EncoderParams& e, NamedParams& out) {
  out.emplace_back(prefix + "conv_in", e.conv_in);
  collect_stage(prefix + "stage0.", e.stage0, out);
  collect_stage(prefix + "stage1.", e.stage1, out);
}

void set_trainable(const NamedParams& params, bool flag) {
  for (const auto& [name, p] : params) {
    DiffArray handle = p;
    handle.set_requires_grad(flag);
  }
}

DiffArray with_ones_channel(const DiffArray& x) {
  return nn::concat(x, DiffArray::full({x.dim(0), 1, x.dim(2), x.dim(3)}, Real(1)), 1);
}

}  // namespace

ModelConfig ModelConfig::standard(const std::vector<graph::MetaPath>& schema, std::size_t feature_dim) {
  ModelConfig cfg;
  cfg.caption_dim = feature_dim;
  cfg.gnn.schema = schema;
  cfg.gnn.feature_dim = feature_dim;
  cfg.gnn.channels = cfg.channels;
  cfg.gnn.image_channels = cfg.channels;
  return cfg;
}

Preconditioning precondition(Real sigma, Real sigma_data) {
  if (!(sigma > 0)) throw Error("precondition: sigma must be positive");
  const Real s2 = sigma * sigma, d2 = sigma_data * sigma_data;
  const Real root = std::sqrt(s2 + d2);
  return {d2 / (s2 + d2), sigma * sigma_data / root, Real(1) / root, std::log(sigma) / 4};
}

Real loss_weight(Real sigma, Real sigma_data) {
  const Real sd = sigma * sigma_data;
  return (sigma * sigma + sigma_data * sigma_data) / (sd * sd);
}

Denoiser::Denoiser(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.resolution % 2 != 0) throw Error("denoiser: resolution must be even");
  if (cfg_.blocks_per_stage == 0) throw Error("denoiser: need at least one block per stage");
  Rng rng(seed);
  const auto C = cfg_.channels;
  base_.emb = {init_weight({cfg_.emb_dim, cfg_.fourier_dim}, rng), init_weight({cfg_.emb_dim, cfg_.emb_dim}, rng),
               init_weight({cfg_.emb_dim, cfg_.caption_dim}, rng), DiffArray::parameter({1}, {Real(0)})};
  base_.enc.conv_in = init_weight({C, cfg_.image_channels + 1, 3, 3}, rng);
  base_.enc.stage0 = init_stage(cfg_, rng);
  base_.enc.stage1 = init_stage(cfg_, rng);
  base_.dec1 = init_stage(cfg_, rng);
  base_.skip_proj = init_weight({C, 2 * C, 1, 1}, rng);
  base_.dec0 = init_stage(cfg_, rng);
  base_.conv_out = init_weight({cfg_.image_channels, C, 3, 3}, rng);
  base_.out_gain = DiffArray::parameter({1}, {Real(0)});

  Rng frng(kFourierSeed);
  for (std::size_t i = 0; i < cfg_.fourier_dim; ++i) fourier_freq_.push_back(frng.normal());
  for (std::size_t i = 0; i < cfg_.fourier_dim; ++i) fourier_phase_.push_back(frng.uniform());
}

void Denoiser::add_control(std::uint64_t seed) {
  Rng rng(seed);
  auto gcfg = cfg_.gnn;
  ControlParams c;
  c.emb = clone(base_.emb);
  c.enc = clone(base_.enc);
  c.gnn = gnn::HIGnnParams::init(gcfg, rng);
  for (std::size_t k = 0; k < kInjectionPoints; ++k) {
    c.inject_proj.push_back(init_weight({cfg_.channels, cfg_.channels, 1, 1}, rng));
    c.inject_gain.push_back(DiffArray::parameter({1}, {Real(0)}));
  }
  control_ = std::move(c);
}

NamedParams Denoiser::base_parameters() const {
  NamedParams out;
  collect_embedding("base.emb.", base_.emb, out);
  collect_encoder("base.enc.", base_.enc, out);
  collect_stage("base.dec1.", base_.dec1, out);
  out.emplace_back("base.skip_proj", base_.skip_proj);
  collect_stage("base.dec0.", base_.dec0, out);
  out.emplace_back("base.conv_out", base_.conv_out);
  out.emplace_back("base.out_gain", base_.out_gain);
  return out;
}

NamedParams Denoiser::control_parameters() const {
  if (!control_) throw Error("denoiser has no control branch");
  NamedParams out;
  collect_embedding("control.emb.", control_->emb, out);
  collect_encoder("control.enc.", control_->enc, out);
  control_->gnn.collect("control.gnn.", cfg_.gnn, out);
  for (std::size_t k = 0; k < kInjectionPoints; ++k) {
    out.emplace_back("control.inject" + std::to_string(k) + ".proj", control_->inject_proj[k]);
    out.emplace_back("control.inject" + std::to_string(k) + ".gain", control_->inject_gain[k]);
  }
  return out;
}

void Denoiser::set_base_trainable(bool flag) { set_trainable(base_parameters(), flag); }
void Denoiser::set_control_trainable(bool flag) { set_trainable(control_parameters(), flag); }

DiffArray Denoiser::embedding(const EmbeddingParams& p, const std::vector<Real>& c_noise,
                              const graph::HeteroImageGraph* graph) const {
  const auto B = c_noise.size();
  const auto n = cfg_.fourier_dim;
  std::vector<Real> f(B * n);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < n; ++i)
      f[b * n + i] = std::numbers::sqrt2_v<Real> *
                     std::cos(2 * std::numbers::pi_v<Real> * (fourier_freq_[i] * c_noise[b] + fourier_phase_[i]));
  auto emb = DiffArray::constant({B, n}, std::move(f));
  emb = mp::mp_silu(nn::linear(emb, mp::forced_weight_norm(p.w0, cfg_.weight_eps)));
  emb = mp::mp_silu(nn::linear(emb, mp::forced_weight_norm(p.w1, cfg_.weight_eps)));
  if (cfg_.caption_conditioning && graph != nullptr && !graph->caption.empty()) {
    if (graph->caption.size() != B * cfg_.caption_dim) throw Error("denoiser: caption width mismatch");
    std::vector<Real> cap = graph->caption;
    const Real s = std::sqrt(static_cast<Real>(cfg_.caption_dim));
    for (auto& v : cap) v *= s;
    auto c = nn::linear(DiffArray::constant({B, cfg_.caption_dim}, std::move(cap)),
                        mp::forced_weight_norm(p.caption_w, cfg_.weight_eps));
    emb = mp::mp_sum_gated(emb, c, p.caption_gain, cfg_.t_caption);
  }
  return emb;
}

DiffArray Denoiser::block(const BlockParams& p, const DiffArray& x, const DiffArray& emb) const {
  const auto eps = cfg_.weight_eps;
  auto y = nn::conv2d(mp::mp_silu(x), mp::forced_weight_norm(p.conv_a, eps));
  auto m = nn::add_scalar(mp::zero_gain(nn::linear(emb, mp::forced_weight_norm(p.emb_w, eps)), p.emb_gain),
                          Real(1));
  y = mp::mp_silu(nn::channel_modulate(y, m));
  y = nn::conv2d(y, mp::forced_weight_norm(p.conv_b, eps));
  return mp::mp_sum(x, y, cfg_.t_skip);
}

DiffArray Denoiser::inject(std::size_t k, const DiffArray& base, const DiffArray& control) const {
  const auto& gain = control_->inject_gain[k];
  if (cfg_.injection == InjectionVariant::kNaive) return nn::add(base, mp::zero_gain(control, gain));
  return mp::mp_sum_gated(base, control, gain, cfg_.t_inject);
}

DiffArray Denoiser::raw_forward(const DiffArray& x_in, const std::vector<Real>& c_noise,
                                const graph::HeteroImageGraph* graph, const gnn::GraphInputs* inputs,
                                std::vector<double>* probes) const {
  const auto eps = cfg_.weight_eps;
  const bool conditioned = graph != nullptr && control_.has_value();
  if (graph != nullptr && !control_) throw Error("denoiser: a graph was given but there is no control branch");

  // The control model's embedding copy drives the backbone whenever the
  // branch exists; at initialisation it equals the base embedding.
  const auto& emb_params = control_ ? control_->emb : base_.emb;
  auto emb = embedding(emb_params, c_noise, graph);

  std::vector<DiffArray> ctrl;
  if (conditioned) {
    std::optional<gnn::GraphInputs> owned;
    if (inputs == nullptr) inputs = &owned.emplace(gnn::prepare_inputs(*graph));
    const auto& c = *control_;
    auto h = nn::conv2d(with_ones_channel(x_in), mp::forced_weight_norm(c.enc.conv_in, eps));
    h = gnn::hignn_forward(*graph, *inputs, h, c.gnn, cfg_.gnn);
    for (const auto& b : c.enc.stage0) h = block(b, h, emb);
    ctrl.push_back(nn::conv2d(h, mp::forced_weight_norm(c.inject_proj[0], eps)));
    h = nn::avg_pool2(h);
    for (const auto& b : c.enc.stage1) h = block(b, h, emb);
    ctrl.push_back(nn::conv2d(h, mp::forced_weight_norm(c.inject_proj[1], eps)));
  }

  auto h = nn::conv2d(with_ones_channel(x_in), mp::forced_weight_norm(base_.enc.conv_in, eps));
  auto stage_end = [&](std::size_t k, DiffArray v) {
    if (conditioned) {
      if (probes) probes->push_back(gnn::rms(ctrl[k]));
      return inject(k, v, ctrl[k]);
    }
    if (probes) probes->push_back(gnn::rms(v));
    return v;
  };
  for (const auto& b : base_.enc.stage0) h = block(b, h, emb);
  h = stage_end(0, h);
  auto skip0 = h;
  h = nn::avg_pool2(h);
  for (const auto& b : base_.enc.stage1) h = block(b, h, emb);
  h = stage_end(1, h);
  for (const auto& b : base_.dec1) h = block(b, h, emb);
  h = nn::upsample_nearest2(h);
  h = mp::mp_cat(h, skip0, cfg_.t_decoder_cat, 1);
  h = nn::conv2d(h, mp::forced_weight_norm(base_.skip_proj, eps));
  for (const auto& b : base_.dec0) h = block(b, h, emb);
  auto out = nn::conv2d(h, mp::forced_weight_norm(base_.conv_out, eps));
  return mp::zero_gain(out, base_.out_gain);
}

DiffArray Denoiser::denoise(const DiffArray& x, const std::vector<Real>& sigma,
                            const graph::HeteroImageGraph* graph, const gnn::GraphInputs* inputs,
                            std::vector<double>* probes) const {
  if (x.ndim() != 4 || x.dim(1) != cfg_.image_channels)
    throw Error("denoise: expected (B, " + std::to_string(cfg_.image_channels) + ", H, W), got " +
                shape_string(x.shape()));
  if (sigma.size() != x.dim(0)) throw Error("denoise: one sigma per batch element required");
  if (graph != nullptr && (graph->batch != x.dim(0) || graph->height != x.dim(2) || graph->width != x.dim(3)))
    throw Error("denoise: graph grid " + std::to_string(graph->height) + "x" + std::to_string(graph->width) +
                " (batch " + std::to_string(graph->batch) + ") does not match image " + shape_string(x.shape()));
  std::vector<Real> c_skip, c_out, c_in, c_noise;
  for (Real s : sigma) {
    const auto p = precondition(s, cfg_.sigma_data);
    c_skip.push_back(p.c_skip);
    c_out.push_back(p.c_out);
    c_in.push_back(p.c_in);
    c_noise.push_back(p.c_noise);
  }
  auto f = raw_forward(nn::scale_batch(x, c_in), c_noise, graph, inputs, probes);
  return nn::add(nn::scale_batch(x, c_skip), nn::scale_batch(f, c_out));
}

}  // namespace hig::model
