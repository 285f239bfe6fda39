// SPDX-License-Identifier: Apache-2.0
#include "hig/model/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "hig/core/nn_ops.hpp"

namespace hig::model {
namespace {

using io::format_real;
using io::take;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("invalid config: " + what);
}

double mean(const std::vector<StepMetrics>& h, std::size_t lo, std::size_t hi) {
  double s = 0;
  for (std::size_t i = lo; i < hi; ++i) s += h[i].loss;
  return s / static_cast<double>(hi - lo);
}

}  // namespace

Real sample_sigma(Rng& rng, const NoiseConfig& cfg) { return std::exp(cfg.p_mean + cfg.p_std * rng.normal()); }

Real learning_rate(std::size_t step, Real alpha_ref, Real t_ref) {
  return alpha_ref / std::sqrt(std::max(static_cast<Real>(step) / t_ref, Real(1)));
}

LossSample denoising_loss(const Denoiser& model, const DiffArray& x0,
                          const graph::HeteroImageGraph* graph, Rng& rng, const NoiseConfig& cfg) {
  const auto B = x0.dim(0);
  const auto per = x0.numel() / B;
  LossSample out;
  std::vector<Real> noisy(x0.values().begin(), x0.values().end());
  std::vector<Real> weight;
  for (std::size_t b = 0; b < B; ++b) {
    const Real s = sample_sigma(rng, cfg);
    out.sigma.push_back(s);
    weight.push_back(loss_weight(s, cfg.sigma_data));
    for (std::size_t i = 0; i < per; ++i) noisy[b * per + i] += s * rng.normal();
  }
  try {
    auto d = model.denoise(DiffArray::constant(x0.shape(), std::move(noisy)), out.sigma, graph, nullptr,
                           &out.probes);
    out.loss = nn::weighted_mse(d, x0, weight);
  } catch (const Error& e) {
    std::ostringstream os;
    os << "non-finite loss at sigma = [";
    for (std::size_t b = 0; b < B; ++b) os << (b ? ", " : "") << out.sigma[b];
    os << "]: " << e.what();
    throw Error(os.str());
  }
  return out;
}

Phase parse_phase(const std::string& name) {
  if (name == "base") return Phase::kBase;
  if (name == "control") return Phase::kControl;
  throw Error("unknown phase '" + name + "' (expected base or control)");
}

const char* phase_name(Phase phase) { return phase == Phase::kBase ? "base" : "control"; }

void apply_train_keys(TrainConfig& cfg, io::KeyValues& kv) {
  take(kv, "train.alpha_ref", cfg.alpha_ref);
  take(kv, "train.t_ref", cfg.t_ref);
  take(kv, "train.batch", cfg.batch);
  take(kv, "train.steps", cfg.steps);
  take(kv, "train.seed", cfg.seed);
  take(kv, "train.mask_dropout", cfg.mask_dropout);
  take(kv, "train.beta1", cfg.beta1);
  take(kv, "train.beta2", cfg.beta2);
  take(kv, "train.adam_eps", cfg.adam_eps);
  take(kv, "train.renormalize", cfg.renormalize);
  take(kv, "noise.p_mean", cfg.noise.p_mean);
  take(kv, "noise.p_std", cfg.noise.p_std);
  take(kv, "noise.sigma_data", cfg.noise.sigma_data);
  require(cfg.alpha_ref > 0 && cfg.t_ref > 0, "learning-rate parameters must be positive");
  require(cfg.batch > 0, "train.batch must be positive");
  require(cfg.mask_dropout >= 0 && cfg.mask_dropout <= 1, "train.mask_dropout must lie in [0, 1]");
  require(cfg.noise.p_std > 0, "noise.p_std must be positive");
  require(cfg.noise.sigma_data > 0, "noise.sigma_data must be positive");
}

void apply_model_keys(ModelConfig& cfg, io::KeyValues& kv) {
  take(kv, "model.resolution", cfg.resolution);
  take(kv, "model.channels", cfg.channels);
  take(kv, "model.blocks_per_stage", cfg.blocks_per_stage);
  take(kv, "model.fourier_dim", cfg.fourier_dim);
  take(kv, "model.emb_dim", cfg.emb_dim);
  take(kv, "model.sigma_data", cfg.sigma_data);
  take(kv, "model.t_skip", cfg.t_skip);
  take(kv, "model.t_decoder_cat", cfg.t_decoder_cat);
  take(kv, "model.t_inject", cfg.t_inject);
  take(kv, "model.t_caption", cfg.t_caption);
  take(kv, "model.weight_eps", cfg.weight_eps);
  take(kv, "model.caption_conditioning", cfg.caption_conditioning);
  if (auto it = kv.find("model.injection"); it != kv.end()) {
    if (it->second == "mp") cfg.injection = InjectionVariant::kMagnitudePreserving;
    else if (it->second == "naive") cfg.injection = InjectionVariant::kNaive;
    else throw Error("config key model.injection: expected mp or naive, got '" + it->second + "'");
    kv.erase(it);
  }
  take(kv, "gnn.blocks", cfg.gnn.blocks);
  take(kv, "gnn.t_sum", cfg.gnn.conv.t_sum);
  take(kv, "gnn.t_cat", cfg.gnn.conv.t_cat);
  take(kv, "gnn.per_graph_path_count", cfg.gnn.per_graph_path_count);
  if (auto it = kv.find("gnn.variant"); it != kv.end()) {
    cfg.gnn.conv.variant = gnn::parse_variant(it->second);
    kv.erase(it);
  }
  cfg.gnn.conv.weight_eps = cfg.weight_eps;
  cfg.gnn.channels = cfg.channels;
  cfg.gnn.image_channels = cfg.channels;
  require(cfg.channels > 0 && cfg.emb_dim > 0 && cfg.fourier_dim > 0, "model widths must be positive");
  require(cfg.resolution >= 2 && cfg.resolution % 2 == 0, "model.resolution must be even");
  require(cfg.gnn.blocks >= 1, "gnn.blocks must be at least 1");
  require(cfg.weight_eps > 0, "model.weight_eps must be positive");
  for (Real t : {cfg.t_skip, cfg.t_decoder_cat, cfg.t_inject, cfg.t_caption, cfg.gnn.conv.t_sum, cfg.gnn.conv.t_cat})
    require(t >= 0 && t <= 1, "mixing constants must lie in [0, 1]");
}

io::KeyValues train_keys(const TrainConfig& c) {
  return {{"train.alpha_ref", format_real(c.alpha_ref)},
          {"train.t_ref", format_real(c.t_ref)},
          {"train.batch", std::to_string(c.batch)},
          {"train.steps", std::to_string(c.steps)},
          {"train.seed", std::to_string(c.seed)},
          {"train.mask_dropout", format_real(c.mask_dropout)},
          {"train.beta1", format_real(c.beta1)},
          {"train.beta2", format_real(c.beta2)},
          {"train.adam_eps", format_real(c.adam_eps)},
          {"train.renormalize", c.renormalize ? "true" : "false"},
          {"noise.p_mean", format_real(c.noise.p_mean)},
          {"noise.p_std", format_real(c.noise.p_std)},
          {"noise.sigma_data", format_real(c.noise.sigma_data)}};
}

io::KeyValues model_keys(const ModelConfig& c) {
  return {{"model.resolution", std::to_string(c.resolution)},
          {"model.channels", std::to_string(c.channels)},
          {"model.blocks_per_stage", std::to_string(c.blocks_per_stage)},
          {"model.fourier_dim", std::to_string(c.fourier_dim)},
          {"model.emb_dim", std::to_string(c.emb_dim)},
          {"model.sigma_data", format_real(c.sigma_data)},
          {"model.t_skip", format_real(c.t_skip)},
          {"model.t_decoder_cat", format_real(c.t_decoder_cat)},
          {"model.t_inject", format_real(c.t_inject)},
          {"model.t_caption", format_real(c.t_caption)},
          {"model.weight_eps", format_real(c.weight_eps)},
          {"model.caption_conditioning", c.caption_conditioning ? "true" : "false"},
          {"model.injection", c.injection == InjectionVariant::kNaive ? "naive" : "mp"},
          {"gnn.blocks", std::to_string(c.gnn.blocks)},
          {"gnn.t_sum", format_real(c.gnn.conv.t_sum)},
          {"gnn.t_cat", format_real(c.gnn.conv.t_cat)},
          {"gnn.per_graph_path_count", c.gnn.per_graph_path_count ? "true" : "false"},
          {"gnn.variant", gnn::variant_name(c.gnn.conv.variant)}};
}

void write_metrics_header(std::ostream& csv) {
  csv << "step,loss,lr";
  for (std::size_t k = 0; k < kInjectionPoints; ++k) csv << ",probe_rms_" << k;
  csv << '\n';
}

void write_metrics_row(std::ostream& csv, const StepMetrics& m) {
  csv << m.step << ',' << format_real(m.loss) << ',' << format_real(m.lr);
  for (double p : m.probes) csv << ',' << format_real(p);
  csv << '\n';
  csv.flush();
}

TrainResult train(Denoiser& model, const TrainingSet& data, const TrainConfig& cfg, Phase phase,
                  std::ostream* csv, const std::function<void(const StepMetrics&)>& on_step) {
  if (data.images.empty()) throw Error("train: empty dataset");
  if (phase == Phase::kControl && data.graphs.size() != data.images.size())
    throw Error("train: control phase needs one graph per image");
  if (phase == Phase::kControl && !model.has_control()) throw Error("train: model has no control branch");
  const auto t0 = std::chrono::steady_clock::now();

  NamedParams params;
  if (phase == Phase::kBase) {
    model.set_base_trainable(true);
    if (model.has_control()) model.set_control_trainable(false);
    params = model.base_parameters();
  } else {
    model.set_base_trainable(false);
    model.set_control_trainable(true);
    params = model.control_parameters();
  }
  std::vector<std::vector<Real>> m1, m2;
  for (const auto& [name, p] : params) {
    m1.emplace_back(p.numel(), Real(0));
    m2.emplace_back(p.numel(), Real(0));
  }

  Rng order_rng(derive_seed(cfg.seed, 1));
  Rng noise_rng(derive_seed(cfg.seed, 2));
  Rng dropout_rng(derive_seed(cfg.seed, 3));
  std::vector<std::size_t> order(data.images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  const auto per = data.channels * data.height * data.width;
  TrainResult result;
  if (csv) write_metrics_header(*csv);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    std::vector<Real> batch;
    std::vector<graph::HeteroImageGraph> graphs;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng.engine());
        cursor = 0;
      }
      const auto idx = order[cursor++];
      if (data.images[idx].size() != per) throw Error("train: image " + std::to_string(idx) + " has wrong size");
      batch.insert(batch.end(), data.images[idx].begin(), data.images[idx].end());
      if (phase == Phase::kControl) graphs.push_back(graph::mask_dropout(data.graphs[idx], cfg.mask_dropout, dropout_rng));
    }
    auto x0 = DiffArray::constant({cfg.batch, data.channels, data.height, data.width}, std::move(batch));
    std::optional<graph::HeteroImageGraph> g;
    if (phase == Phase::kControl) g = graph::disjoint_union(graphs);

    StepMetrics metrics{step, 0, static_cast<double>(learning_rate(step, cfg.alpha_ref, cfg.t_ref)), {}};
    LossSample ls;
    try {
      ls = denoising_loss(model, x0, g ? &*g : nullptr, noise_rng, cfg.noise);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "training diverged at step " << step << ": " << e.what();
      if (!result.history.empty()) {
        os << "; last probe RMS:";
        for (double p : result.history.back().probes) os << ' ' << p;
      }
      throw Error(os.str());
    }
    metrics.loss = static_cast<double>(ls.loss.item());
    metrics.probes = ls.probes;
    for (const auto& [name, p] : params) {
      DiffArray h = p;
      h.zero_grad();
    }
    backward(ls.loss);

    const Real lr = static_cast<Real>(metrics.lr);
    const Real bc1 = 1 - std::pow(cfg.beta1, static_cast<Real>(step));
    const Real bc2 = 1 - std::pow(cfg.beta2, static_cast<Real>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      DiffArray p = params[i].second;
      if (!p.has_grad()) continue;
      auto g = p.grad();
      auto v = p.mutable_values();
      for (std::size_t k = 0; k < v.size(); ++k) {
        m1[i][k] = cfg.beta1 * m1[i][k] + (1 - cfg.beta1) * g[k];
        m2[i][k] = cfg.beta2 * m2[i][k] + (1 - cfg.beta2) * g[k] * g[k];
        v[k] -= lr * (m1[i][k] / bc1) / (std::sqrt(m2[i][k] / bc2) + cfg.adam_eps);
      }
      if (cfg.renormalize && p.ndim() >= 2) renormalize_rows(p);
    }
    if (!std::isfinite(metrics.loss)) throw Error("training diverged at step " + std::to_string(step));
    result.history.push_back(metrics);
    if (csv) write_metrics_row(*csv, metrics);
    if (on_step) on_step(metrics);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

double loss_reduction(const std::vector<StepMetrics>& history, std::size_t window) {
  if (history.size() < 2 * window) throw Error("loss_reduction: history shorter than two windows");
  return 1.0 - mean(history, history.size() - window, history.size()) / mean(history, 0, window);
}

}  // namespace hig::model
