// SPDX-License-Identifier: Apache-2.0
// hig: data generation, graph building, two-phase training, sampling,
// evaluation and verification from the command line.
//
// Exit codes: 0 success, 1 run error, 2 usage error.
#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hig/cli/run_config.hpp"
#include "hig/graph/graph_io.hpp"
#include "hig/io/checkpoint.hpp"
#include "hig/io/image_io.hpp"
#include "hig/model/params.hpp"
#include "hig/synth/dataset.hpp"
#include "hig/synth/metrics.hpp"
#include "hig/verify/suites.hpp"

namespace fs = std::filesystem;
using namespace hig;

namespace {

constexpr const char* kModelFile = "model.hgw";
constexpr const char* kConfigFile = "config.txt";
constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kLockFile = "lock.txt";

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::vector<std::string> extras;  // --section.key value pairs
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value file; CLI keys override it");
  cmd->add_option("--seed", c.seed, "seed for this command (falls back to HIG_SEED)");
  cmd->add_option("--threads", c.threads, "OpenMP thread cap (1 is bit-exact serial)")->check(CLI::PositiveNumber);
  cmd->allow_extras();
}

io::KeyValues parse_overrides(const std::vector<std::string>& extras) {
  io::KeyValues kv;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.find('.') == std::string::npos)
      throw cli::UsageError("unexpected argument '" + tok + "'");
    auto key = tok.substr(2);
    if (const auto eq = key.find('='); eq != std::string::npos) {
      kv[key.substr(0, eq)] = key.substr(eq + 1);
      continue;
    }
    if (i + 1 >= extras.size()) throw cli::UsageError("missing value for --" + key);
    kv[key] = extras[++i];
  }
  return kv;
}

cli::RunConfig resolve(const Common& c, io::KeyValues base_file = {}) {
  if (c.threads > 0) omp_set_num_threads(c.threads);
  if (!c.config.empty()) {
    if (!fs::exists(c.config)) throw cli::UsageError("config file not found: " + c.config);
    for (const auto& [k, v] : io::read_key_values(c.config)) base_file[k] = v;
  }
  return cli::resolve_config(base_file, parse_overrides(c.extras), cli::resolve_seed(c.seed));
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error("cannot create " + p.string() + ": " + ec.message());
}

// --- checkpoints ---------------------------------------------------------------

void save_model(const model::Denoiser& m, const cli::RunConfig& cfg, const fs::path& dir) {
  auto tensors = model::to_tensor_map(m.base_parameters());
  if (m.has_control()) tensors.merge(model::to_tensor_map(m.control_parameters()));
  io::save_checkpoint(tensors, dir / kModelFile);
  std::ofstream(dir / kConfigFile) << io::format_key_values(cfg.keys());
}

struct Loaded {
  cli::RunConfig cfg;
  io::KeyValues keys;
  std::unique_ptr<model::Denoiser> model;
};

Loaded load_model(const fs::path& dir, const char* what) {
  if (!fs::exists(dir / kModelFile)) throw Error(std::string("missing ") + what + " checkpoint: " + (dir / kModelFile).string());
  Loaded l;
  l.keys = io::read_key_values(dir / kConfigFile);
  l.cfg = cli::resolve_config(l.keys, {}, std::nullopt);
  const auto tensors = io::load_checkpoint(dir / kModelFile);
  l.model = std::make_unique<model::Denoiser>(l.cfg.model, 0);
  model::load_into(l.model->base_parameters(), tensors, (dir / kModelFile).string());
  if (std::any_of(tensors.begin(), tensors.end(), [](const auto& t) { return t.first.rfind("control.", 0) == 0; })) {
    l.model->add_control(0);
    model::load_into(l.model->control_parameters(), tensors, (dir / kModelFile).string());
  }
  return l;
}

// --- commands ------------------------------------------------------------------

int cmd_gen_data(const Common& c, const std::string& out, std::size_t count) {
  const auto cfg = resolve(c);
  ensure_dir(out);
  const auto entries = synth::generate_dataset(count, cfg.scene, out);
  cli::write_lockfile(fs::path(out) / kLockFile, "gen-data --count " + std::to_string(count), cfg);
  std::cout << "wrote " << entries.size() << " scenes to " << out << '\n';
  return 0;
}

int cmd_build_graphs(const Common& c, const std::string& data, const std::string& out) {
  const auto cfg = resolve(c);
  const auto scenes = synth::load_dataset(data);
  ensure_dir(out);
  const auto emb = cfg.embedder();
  for (const auto& s : scenes)
    graph::save_graph(graph::build_hig(s.annotation, emb, cfg.graph.build), fs::path(out) / (s.stem + ".hig"));
  cli::write_lockfile(fs::path(out) / kLockFile, "build-graphs", cfg);
  std::cout << "wrote " << scenes.size() << " graphs to " << out << '\n';
  return 0;
}

model::TrainingSet training_set(const cli::RunConfig& cfg, const std::string& data) {
  const auto scenes = synth::load_dataset(data);
  if (scenes.empty()) throw Error("dataset " + data + " is empty");
  model::TrainingSet set;
  set.channels = cfg.model.image_channels;
  set.height = set.width = cfg.model.resolution;
  const auto emb = cfg.embedder();
  for (const auto& s : scenes) {
    if (s.image.height != set.height || s.image.width != set.width || s.image.channels != set.channels)
      throw Error("scene " + s.stem + " does not match model.resolution " + std::to_string(set.height));
    set.images.push_back(synth::to_model_space(s.image));
    set.graphs.push_back(graph::build_hig(s.annotation, emb, cfg.graph.build));
  }
  return set;
}

int cmd_train(const Common& c, const std::string& phase_name, const std::string& data, const std::string& out,
              const std::string& base_dir) {
  const auto phase = model::parse_phase(phase_name);
  std::unique_ptr<model::Denoiser> m;
  cli::RunConfig cfg;
  if (phase == model::Phase::kControl) {
    if (base_dir.empty() || !fs::exists(fs::path(base_dir) / kModelFile))
      throw Error("missing base checkpoint" + (base_dir.empty() ? std::string(" (pass --base DIR)") : ": " + base_dir));
    auto base = load_model(base_dir, "base");
    // The backbone shape is fixed by the base run; its keys act as the file layer.
    cfg = resolve(c, base.keys);
    m = std::make_unique<model::Denoiser>(cfg.model, 0);
    model::load_into(m->base_parameters(), model::to_tensor_map(base.model->base_parameters()), base_dir);
    m->add_control(derive_seed(cfg.train.seed, 4));
  } else {
    cfg = resolve(c);
    m = std::make_unique<model::Denoiser>(cfg.model, derive_seed(cfg.train.seed, 3));
  }
  const auto set = training_set(cfg, data);
  ensure_dir(out);
  cli::write_lockfile(fs::path(out) / kLockFile, std::string("train --phase ") + model::phase_name(phase), cfg);
  std::ofstream csv(fs::path(out) / kMetricsFile);
  const auto result = model::train(*m, set, cfg.train, phase, &csv, [](const model::StepMetrics& s) {
    if (s.step % 250 == 0) std::cerr << "step " << s.step << " loss " << s.loss << '\n';
  });
  save_model(*m, cfg, out);
  std::cout << model::phase_name(phase) << " phase: " << result.history.size() << " steps in " << result.seconds
            << " s";
  if (result.history.size() >= 100) std::cout << ", loss reduction " << model::loss_reduction(result.history);
  std::cout << '\n';
  return 0;
}

struct Layout {
  std::string stem;
  graph::HeteroImageGraph graph;
};

std::vector<Layout> read_layouts(const cli::RunConfig& cfg, const std::string& layouts, const std::string& graphs) {
  std::vector<Layout> out;
  if (!graphs.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(graphs))
      if (e.path().extension() == ".hig") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back({f.stem().string(), graph::load_graph(f)});
  } else {
    const auto emb = cfg.embedder();
    for (const auto& s : synth::load_dataset(layouts))
      out.push_back({s.stem, graph::build_hig(s.annotation, emb, cfg.graph.build)});
  }
  if (out.empty()) throw Error("no layouts found");
  return out;
}

int cmd_sample(const Common& c, const std::string& model_dir, const std::string& guide_dir,
               const std::string& layouts, const std::string& graphs, const std::string& out, std::size_t count,
               std::optional<double> w, bool emit_grid) {
  if (layouts.empty() == graphs.empty()) throw cli::UsageError("pass exactly one of --layouts or --graphs");
  auto primary = load_model(model_dir, "model");
  if (!primary.model->has_control()) throw Error("model checkpoint " + model_dir + " has no control branch");
  auto cfg = resolve(c, primary.keys);
  if (w) cfg.sampler.guidance = static_cast<Real>(*w);
  // The frozen backbone of the control checkpoint is the base model.
  std::unique_ptr<model::Denoiser> guide_owned;
  if (guide_dir.empty()) {
    guide_owned = std::make_unique<model::Denoiser>(primary.cfg.model, 0);
    model::load_into(guide_owned->base_parameters(), model::to_tensor_map(primary.model->base_parameters()), model_dir);
  } else {
    guide_owned = std::move(load_model(guide_dir, "guide").model);
  }
  auto all = read_layouts(cfg, layouts, graphs);
  if (count > 0 && count < all.size()) all.resize(count);

  ensure_dir(out);
  const auto& mc = primary.cfg.model;
  const std::size_t C = mc.image_channels, H = mc.resolution, W = mc.resolution, batch = 16;
  std::vector<io::Image> images;
  nlohmann::json index = nlohmann::json::array();
  for (std::size_t start = 0, b = 0; start < all.size(); start += batch, ++b) {
    const auto end = std::min(all.size(), start + batch);
    std::vector<graph::HeteroImageGraph> parts;
    for (std::size_t i = start; i < end; ++i) parts.push_back(all[i].graph);
    const auto g = graph::disjoint_union(parts);
    const auto n = end - start;
    auto scfg = cfg.sampler;
    scfg.seed = derive_seed(cfg.sampler.seed, b);
    const auto fn = sampling::guided_denoiser(*primary.model, *guide_owned, g, {n, C, H, W}, scfg.guidance);
    const auto x = sampling::sample(fn, n * C * H * W, scfg);
    for (std::size_t i = 0; i < n; ++i) {
      const auto img = synth::from_model_space(
          std::vector<Real>(x.begin() + static_cast<long>(i * C * H * W), x.begin() + static_cast<long>((i + 1) * C * H * W)),
          C, H, W);
      char stem[32];
      std::snprintf(stem, sizeof stem, "sample_%05zu", start + i);
      io::write_png(img, fs::path(out) / (std::string(stem) + ".png"));
      io::write_raw(img, fs::path(out) / (std::string(stem) + ".hgf"));
      index.push_back({{"sample", stem}, {"layout", all[start + i].stem}});
      images.push_back(img);
    }
  }
  std::ofstream(fs::path(out) / "samples.json") << index.dump(1) << '\n';
  if (emit_grid) io::write_png(io::contact_sheet(images, 8), fs::path(out) / "grid.png");
  cli::write_lockfile(fs::path(out) / kLockFile, "sample", cfg);
  std::cout << "wrote " << images.size() << " samples to " << out << " (w = " << cfg.sampler.guidance << ")\n";
  return 0;
}

int cmd_eval(const Common& c, const std::string& samples, const std::string& layouts, const std::string& out) {
  resolve(c);
  std::ifstream in(fs::path(samples) / "samples.json");
  if (!in) throw Error("no samples.json in " + samples);
  const auto index = nlohmann::json::parse(in);
  std::map<std::string, graph::SceneAnnotation> anns;
  for (auto& s : synth::load_dataset(layouts)) anns.emplace(s.stem, std::move(s.annotation));

  std::ofstream csv(out);
  if (!csv) throw Error("cannot write " + out);
  csv << "sample,layout,fidelity,matched,counted,layout_iou,relations_respected,relation_pairs\n";
  std::size_t matched = 0, counted = 0, respected = 0, pairs = 0;
  double iou = 0;
  for (const auto& e : index) {
    const auto stem = e.at("sample").get<std::string>(), layout = e.at("layout").get<std::string>();
    const auto it = anns.find(layout);
    if (it == anns.end()) throw Error("layout " + layout + " not found in " + layouts);
    const auto img = io::read_raw(fs::path(samples) / (stem + ".hgf"));
    const auto f = synth::attribute_fidelity(img, it->second);
    const auto l = synth::layout_iou(img, it->second);
    const auto r = synth::relation_compliance(img, it->second);
    csv << stem << ',' << layout << ',' << f.fraction << ',' << f.matched << ',' << f.counted << ',' << l << ','
        << r.respected << ',' << r.pairs << '\n';
    matched += f.matched, counted += f.counted, respected += r.respected, pairs += r.pairs, iou += l;
  }
  const double n = index.empty() ? 1.0 : static_cast<double>(index.size());
  const double fid = counted ? static_cast<double>(matched) / static_cast<double>(counted) : 0.0;
  const double rel = pairs ? static_cast<double>(respected) / static_cast<double>(pairs) : 1.0;
  csv << "total,," << fid << ',' << matched << ',' << counted << ',' << iou / n << ',' << respected << ',' << pairs
      << '\n';
  std::cout << "fidelity " << fid << ", layout IoU " << iou / n << ", relations " << rel << " over " << pairs
            << " pairs\n";
  return 0;
}

int cmd_verify(const Common& c, const std::string& suite, const std::string& report, std::size_t train_scenes,
               std::size_t eval_scenes) {
  const auto names = verify::suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end())
    throw cli::UsageError("unknown suite '" + suite + "'");
  const auto rc = resolve(c);
  auto cfg = verify::PipelineConfig::desk_scale();
  if (!c.extras.empty() || !c.config.empty() || c.seed) {
    cfg.scenes = rc.scene;
    cfg.model = rc.model;
    cfg.base = rc.train;
    cfg.control = rc.train;
    cfg.control.seed = rc.train.seed + 1;
    cfg.sampler = rc.sampler;
  }
  if (train_scenes) cfg.train_scenes = train_scenes;
  if (eval_scenes) cfg.eval_scenes = eval_scenes;
  const auto r = verify::run_suite(suite, cfg, &std::cerr);
  r.print(std::cout);
  if (!report.empty()) {
    std::ofstream csv(report);
    if (!csv) throw Error("cannot write " + report);
    csv << "criterion,check,pass,seconds,detail\n";
    for (const auto& x : r.results())
      csv << x.id << ',' << x.name << ',' << (x.pass ? "pass" : "fail") << ',' << x.seconds << ",\"" << x.detail
          << "\"\n";
  }
  return r.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-conditioned diffusion with heterogeneous image graphs"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-data", "generate synthetic scenes");
  std::string gen_out;
  std::size_t gen_count = 2000;
  gen->add_option("--out", gen_out, "dataset directory")->required();
  gen->add_option("--count", gen_count, "number of scenes");
  add_common(gen, common);

  auto* bg = app.add_subcommand("build-graphs", "build one HIG file per scene");
  std::string bg_data, bg_out;
  bg->add_option("--data", bg_data, "dataset directory")->required();
  bg->add_option("--out", bg_out, "graph directory")->required();
  add_common(bg, common);

  auto* tr = app.add_subcommand("train", "train the base model or the control branch");
  std::string tr_phase = "base", tr_data, tr_out, tr_base;
  tr->add_option("--phase", tr_phase, "base or control")->check(CLI::IsMember({"base", "control"}));
  tr->add_option("--data", tr_data, "dataset directory")->required();
  tr->add_option("--out", tr_out, "checkpoint directory")->required();
  tr->add_option("--base", tr_base, "base checkpoint directory (control phase)");
  add_common(tr, common);

  auto* sm = app.add_subcommand("sample", "sample images for layouts with auto-guidance");
  std::string sm_model, sm_guide, sm_layouts, sm_graphs, sm_out;
  std::size_t sm_count = 0;
  std::optional<double> sm_w;
  bool sm_grid = false;
  sm->add_option("--model", sm_model, "control checkpoint directory")->required();
  sm->add_option("--guide", sm_guide, "guide checkpoint (default: the frozen backbone of --model)");
  sm->add_option("--layouts", sm_layouts, "dataset directory whose annotations condition the samples");
  sm->add_option("--graphs", sm_graphs, "directory of .hig files");
  sm->add_option("--out", sm_out, "output directory")->required();
  sm->add_option("--count", sm_count, "number of layouts to sample (0 = all)");
  sm->add_option("--w", sm_w, "auto-guidance strength (default 1.8)");
  sm->add_flag("--emit-grid", sm_grid, "also write grid.png");
  add_common(sm, common);

  auto* ev = app.add_subcommand("eval", "score samples against their layouts");
  std::string ev_samples, ev_layouts, ev_out = "eval.csv";
  ev->add_option("--samples", ev_samples, "sample directory")->required();
  ev->add_option("--layouts", ev_layouts, "dataset directory")->required();
  ev->add_option("--out", ev_out, "CSV report");
  add_common(ev, common);

  auto* vf = app.add_subcommand("verify", "run verification suites");
  std::string vf_suite = "all", vf_report;
  std::size_t vf_train = 0, vf_eval = 0;
  vf->add_option("--suite", vf_suite, "mp-ops, magnitude, gradcheck, sampler-oracle, graph-oracle, pipeline or all");
  vf->add_option("--report", vf_report, "CSV report path");
  vf->add_option("--train-scenes", vf_train, "pipeline training scenes (default 2000)");
  vf->add_option("--eval-scenes", vf_eval, "pipeline held-out layouts (default 64)");
  add_common(vf, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (auto* sub : app.get_subcommands()) common.extras = sub->remaining();
  try {
    if (gen->parsed()) return cmd_gen_data(common, gen_out, gen_count);
    if (bg->parsed()) return cmd_build_graphs(common, bg_data, bg_out);
    if (tr->parsed()) return cmd_train(common, tr_phase, tr_data, tr_out, tr_base);
    if (sm->parsed()) return cmd_sample(common, sm_model, sm_guide, sm_layouts, sm_graphs, sm_out, sm_count, sm_w, sm_grid);
    if (ev->parsed()) return cmd_eval(common, ev_samples, ev_layouts, ev_out);
    if (vf->parsed()) return cmd_verify(common, vf_suite, vf_report, vf_train, vf_eval);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
