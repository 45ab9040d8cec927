#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tenexp/errors.hpp"
#include "tenexp/io.hpp"
#include "tenexp/metrics.hpp"
#include "tenexp/model_io.hpp"
#include "tenexp/rank_estimation.hpp"
#include "tenexp/recovery.hpp"
#include "tenexp/synth.hpp"

using nlohmann::json;
using namespace tenexp;

namespace {

constexpr int kSchema = 1;

// JSON has no infinity literal.
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

Shape parse_shape(const std::string& text) {
  Shape shape;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      throw ArgumentError("cannot parse '" + text + "' as a comma-separated shape");
    }
    if (used != item.size() || v == 0) throw ArgumentError("cannot parse '" + text + "' as a comma-separated shape");
    shape.push_back(v);
  }
  if (shape.empty()) throw ArgumentError("empty shape");
  return shape;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw ArgumentError("cannot parse '" + text + "' as a list of numbers");
    }
    if (used != item.size()) throw ArgumentError("cannot parse '" + text + "' as a list of numbers");
  }
  return out;
}

std::vector<DecompositionKind> parse_kinds(const std::string& text) {
  std::vector<DecompositionKind> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_decomposition_kind(item));
  return out;
}

json ranks_json(const RankEstimate& r) {
  json j;
  j["tucker"] = r.tucker_ranks;
  json fctn = json::array();
  for (std::size_t a = 0; a < r.fctn_ranks.order(); ++a) {
    for (std::size_t b = a + 1; b < r.fctn_ranks.order(); ++b) fctn.push_back({a + 1, b + 1, r.fctn_ranks.get(a, b)});
  }
  j["fctn"] = fctn;
  if (r.tf) j["tf"] = {{"tubal_rank", r.tf->tubal_rank}, {"latent_dim", r.tf->latent_dim}};
  return j;
}

void write_report(const json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  out << text;
}

std::size_t default_threads() {
  if (const char* env = std::getenv("TENEXP_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ArgumentError(std::string("TENEXP_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

// Values from a --config JSON file fill every option not given on the command line.
class ConfigFile {
 public:
  explicit ConfigFile(CLI::App* app) : app_(app) {
    app->add_option("--config", path_, "JSON file with option values; flags take precedence");
  }

  // Commands without parallel work still accept the shared --threads flag.
  void accept_threads() { bind("--threads", ignored_threads_, "worker threads (this command runs on one)"); }

  template <typename T>
  CLI::Option* bind(const std::string& flag, T& target, const std::string& help) {
    CLI::Option* opt = app_->add_option(flag, target, help);
    bindings_.push_back({key_of(flag), opt, [&target](const json& j) { assign(target, j); }});
    return opt;
  }

  CLI::Option* bind_flag(const std::string& flag, bool& target, const std::string& help) {
    CLI::Option* opt = app_->add_flag(flag, target, help);
    bindings_.push_back({key_of(flag), opt, [&target](const json& j) { target = j.get<bool>(); }});
    return opt;
  }

  // Returns whether the key was set from either source.
  bool given(const CLI::Option* opt) const {
    if (opt->count() > 0) return true;
    for (const auto& b : bindings_) {
      if (b.option == opt) return b.from_file;
    }
    return false;
  }

  void apply() {
    if (path_.empty()) return;
    std::ifstream in(path_);
    if (!in) throw ArgumentError("cannot open config file '" + path_ + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError("config file '" + path_ + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw FormatError("config file '" + path_ + "' must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
      auto it = std::find_if(bindings_.begin(), bindings_.end(), [&](const Binding& b) { return b.key == key; });
      if (it == bindings_.end()) throw ArgumentError("config file has unknown key '" + key + "'");
      if (it->option->count() > 0) continue;
      try {
        it->set(value);
      } catch (const json::exception&) {
        throw ArgumentError("config key '" + key + "' has the wrong type");
      }
      it->from_file = true;
    }
  }

 private:
  struct Binding {
    std::string key;
    CLI::Option* option;
    std::function<void(const json&)> set;
    bool from_file = false;
  };

  template <typename T>
  static void assign(T& target, const json& j) {
    target = j.get<T>();
  }

  template <typename T>
  static void assign(std::optional<T>& target, const json& j) {
    target = j.get<T>();
  }

  static std::string key_of(const std::string& flag) {
    std::string key = flag.substr(flag.find_first_not_of('-'));
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
  }

  CLI::App* app_;
  std::string path_;
  std::size_t ignored_threads_ = 1;
  std::vector<Binding> bindings_;
};

struct RecoveryOptions {
  double tau = 0.95;
  std::optional<double> tau_tucker, tau_fctn, tau_tf;
  std::size_t k = 0;
  std::size_t t_max = 5000;
  std::string order = "II";
  std::string strategy = "max";
  std::uint64_t seed = 0;
  double lr = 1e-2;
  double gate_lr = 1e-2;
  std::string candidates;
  bool warm_start = false;
  std::size_t stop_window = 100;
  double stop_tol = 1e-9;
  double init_std = 0.1;
  std::size_t rank = 0;
  std::size_t latent = 0;
  std::size_t trace_every = 10;
  std::size_t threads = 0;
  std::string output;

  void add(ConfigFile& cfg, const std::string& default_output) {
    output = default_output;
    cfg.bind("--tau", tau, "energy threshold for all three rank branches");
    cfg.bind("--tau-tucker", tau_tucker, "energy threshold for Tucker ranks");
    cfg.bind("--tau-fctn", tau_fctn, "energy threshold for FCTN ranks");
    cfg.bind("--tau-tf", tau_tf, "energy threshold for TF ranks");
    cfg.bind("--k", k, "number of selected experts (0 keeps all)");
    cfg.bind("--t-max", t_max, "iterations per phase");
    cfg.bind("--order", order, "updating order: I, II or III");
    cfg.bind("--strategy", strategy, "selection strategy: max or random");
    cfg.bind("--seed", seed, "random seed");
    cfg.bind("--lr", lr, "Adam learning rate for factors");
    cfg.bind("--gate-lr", gate_lr, "Adam learning rate for gate scores");
    cfg.bind("--candidates", candidates, "comma-separated candidate kinds");
    cfg.bind_flag("--warm-start", warm_start, "keep phase-1 factors for the selected experts");
    cfg.bind("--stop-window", stop_window, "iterations compared by the stopping rule");
    cfg.bind("--stop-tol", stop_tol, "relative loss change that stops a phase");
    cfg.bind("--init-std", init_std, "standard deviation of random initial factors");
    rank_option = cfg.bind("--rank", rank, "use this rank for every candidate instead of estimates");
    latent_option = cfg.bind("--latent", latent, "TF latent dimension used with --rank");
    cfg.bind("--trace-every", trace_every, "record the loss every this many iterations (0 disables)");
    cfg.bind("--threads", threads, "worker threads (default TENEXP_THREADS or 1)");
    cfg.bind("--output", output, "prefix for the report, recovered tensor and model files");
  }

  RecoveryConfig resolve(const ConfigFile& cfg) const {
    RecoveryConfig c;
    c.thresholds = EnergyThresholds{tau_tucker.value_or(tau), tau_fctn.value_or(tau), tau_tf.value_or(tau)};
    c.k = k;
    c.t_max = t_max;
    c.order = parse_updating_order(order);
    c.strategy = parse_selection_strategy(strategy);
    c.seed = seed;
    c.factor_adam.learning_rate = lr;
    c.gate_adam.learning_rate = gate_lr;
    if (!candidates.empty()) c.candidates = parse_kinds(candidates);
    c.warm_start = warm_start;
    c.stop_window = stop_window;
    c.stop_tolerance = stop_tol;
    c.init_stddev = init_std;
    if (cfg.given(rank_option) || cfg.given(latent_option)) {
      UniformRanks u;
      if (cfg.given(rank_option)) u.rank = rank;
      if (cfg.given(latent_option)) u.latent_dim = latent;
      c.uniform_ranks = u;
    }
    c.trace_every = trace_every;
    c.threads = threads > 0 ? threads : default_threads();
    return c;
  }

  CLI::Option* rank_option = nullptr;
  CLI::Option* latent_option = nullptr;
};

json config_json(const RecoveryConfig& c, std::size_t order) {
  json j;
  j["tau_tucker"] = c.thresholds.tau_tucker;
  j["tau_fctn"] = c.thresholds.tau_fctn;
  j["tau_tf"] = c.thresholds.tau_tf;
  j["k"] = c.resolved_k(order);
  j["t_max"] = c.t_max;
  j["order"] = to_string(c.order);
  j["strategy"] = to_string(c.strategy);
  j["seed"] = c.seed;
  j["factor_adam"] = {{"learning_rate", c.factor_adam.learning_rate}, {"beta1", c.factor_adam.beta1},
                      {"beta2", c.factor_adam.beta2}, {"epsilon", c.factor_adam.epsilon}};
  j["gate_adam"] = {{"learning_rate", c.gate_adam.learning_rate}, {"beta1", c.gate_adam.beta1},
                    {"beta2", c.gate_adam.beta2}, {"epsilon", c.gate_adam.epsilon}};
  json kinds = json::array();
  for (auto kind : c.resolved_candidates(order)) kinds.push_back(to_string(kind));
  j["candidates"] = kinds;
  j["warm_start"] = c.warm_start;
  j["stop_window"] = c.stop_window;
  j["stop_tolerance"] = c.stop_tolerance;
  j["init_stddev"] = c.init_stddev;
  if (c.uniform_ranks) {
    j["uniform_ranks"] = {{"rank", c.uniform_ranks->rank}, {"latent_dim", c.uniform_ranks->latent_dim}};
  } else {
    j["uniform_ranks"] = nullptr;
  }
  j["trace_every"] = c.trace_every;
  j["threads"] = c.threads;
  return j;
}

json recovery_json(const RecoveryReport& r, const RecoveryConfig& c, std::size_t order) {
  json j;
  j["config"] = config_json(c, order);
  j["ranks"] = ranks_json(r.ranks);
  j["metrics"] = {{"re", number(r.metrics.re)},
                  {"psnr", number(r.metrics.psnr)},
                  {"ssim", number(r.metrics.ssim)},
                  {"cr", number(r.metrics.cr)}};
  json kinds = json::array();
  for (const auto& cand : r.model.candidates) kinds.push_back(to_string(cand.kind()));
  j["candidates"] = kinds;
  j["phase1_gate_scores"] = numbers(r.phase1_scores);
  j["gate_scores"] = numbers(r.model.gates.scores);
  j["gate_weights"] = numbers(r.weights.lambdas);
  j["support"] = r.weights.support;
  json selected = json::array();
  for (auto i : r.weights.support) selected.push_back(to_string(r.model.candidates[i].kind()));
  j["selected"] = selected;
  j["expert_re"] = numbers(r.expert_re);
  j["phase1_iterations"] = r.phase1_iterations;
  j["phase2_iterations"] = r.phase2_iterations;
  j["phase2_ran"] = r.phase2_ran;
  j["final_loss"] = number(r.final_loss);
  json trace = json::array();
  for (const auto& p : r.trace) {
    trace.push_back({{"iteration", p.iteration}, {"phase", p.phase}, {"loss", number(p.loss)},
                     {"gate_scores", numbers(p.gate_scores)}});
  }
  j["trace"] = trace;
  return j;
}

void save_recovery_outputs(const RecoveryReport& r, const std::string& prefix, json& report) {
  write_tensor(prefix + ".npy", r.recovered);
  ModelArchive archive{r.model.candidates, r.model.gates.scores, r.weights.lambdas, r.weights.support, {}};
  save_model(prefix + ".model", archive);
  report["outputs"] = {{"report", prefix + ".json"}, {"recovered", prefix + ".npy"}, {"model", prefix + ".model"}};
}

json header(const std::string& command) {
  json j;
  j["schema"] = kSchema;
  j["command"] = command;
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Each subcommand registers its options and returns the action to run.
using Action = std::function<void()>;

Action add_synth(CLI::App& root) {
  auto* app = root.add_subcommand("synth", "generate a synthetic low-rank tensor");
  struct Opts {
    std::string kind = "tucker";
    std::string shape;
    std::size_t rank = 3;
    std::size_t latent = 10;
    std::uint64_t seed = 0;
    std::string output = "synth";
  };
  auto o = std::make_shared<Opts>();
  auto cfg = std::make_shared<ConfigFile>(app);
  cfg->accept_threads();
  cfg->bind("--kind", o->kind, "tucker, fctn, tf or mixture");
  cfg->bind("--shape", o->shape, "comma-separated mode sizes");
  cfg->bind("--rank", o->rank, "Tucker ranks, FCTN edge ranks and TF tubal rank");
  cfg->bind("--latent", o->latent, "TF latent dimension");
  cfg->bind("--seed", o->seed, "random seed");
  cfg->bind("--output", o->output, "prefix for the .npy, .model and .json files");
  return [o, cfg] {
    const auto start = std::chrono::steady_clock::now();
    cfg->apply();
    if (o->shape.empty()) throw ArgumentError("--shape is required");
    SynthSpec spec{parse_synth_kind(o->kind), parse_shape(o->shape), o->rank, o->latent, o->seed};
    const SynthResult r = synth(spec);
    write_tensor(o->output + ".npy", r.tensor);
    ModelArchive archive;
    archive.candidates = r.components;
    archive.gate_scores.assign(r.components.size(), 0.0);
    archive.gate_weights = r.weights;
    for (std::size_t i = 0; i < r.components.size(); ++i) archive.support.push_back(i);
    save_model(o->output + ".model", archive);
    json report = header("synth");
    report["spec"] = {{"kind", to_string(spec.kind)}, {"shape", spec.shape}, {"rank", spec.rank},
                      {"latent_dim", spec.latent_dim}, {"seed", spec.seed}};
    json kinds = json::array();
    for (const auto& c : r.components) kinds.push_back(to_string(c.kind()));
    report["components"] = kinds;
    report["weights"] = r.weights;
    report["outputs"] = {{"tensor", o->output + ".npy"}, {"model", o->output + ".model"}, {"spec", o->output + ".json"}};
    report["wall_time_seconds"] = seconds_since(start);
    write_report(report, o->output + ".json");
  };
}

Action add_estimate_ranks(CLI::App& root) {
  auto* app = root.add_subcommand("estimate-ranks", "estimate Tucker, FCTN and TF ranks");
  struct Opts {
    std::string input;
    double tau = 0.95;
    std::optional<double> tau_tucker, tau_fctn, tau_tf;
    std::string report;
  };
  auto o = std::make_shared<Opts>();
  auto cfg = std::make_shared<ConfigFile>(app);
  cfg->accept_threads();
  cfg->bind("--input", o->input, "input tensor (.npy)");
  cfg->bind("--tau", o->tau, "energy threshold for all branches");
  cfg->bind("--tau-tucker", o->tau_tucker, "energy threshold for Tucker ranks");
  cfg->bind("--tau-fctn", o->tau_fctn, "energy threshold for FCTN ranks");
  cfg->bind("--tau-tf", o->tau_tf, "energy threshold for TF ranks");
  cfg->bind("--report", o->report, "report path (default stdout)");
  return [o, cfg] {
    const auto start = std::chrono::steady_clock::now();
    cfg->apply();
    if (o->input.empty()) throw ArgumentError("--input is required");
    const DenseTensor x = read_tensor(o->input);
    const EnergyThresholds th{o->tau_tucker.value_or(o->tau), o->tau_fctn.value_or(o->tau), o->tau_tf.value_or(o->tau)};
    const RankEstimate r = estimate_ranks(x, th);
    json report = header("estimate-ranks");
    report["input"] = o->input;
    report["shape"] = x.shape();
    report["thresholds"] = {{"tau_tucker", th.tau_tucker}, {"tau_fctn", th.tau_fctn}, {"tau_tf", th.tau_tf}};
    report["ranks"] = ranks_json(r);
    report["wall_time_seconds"] = seconds_since(start);
    write_report(report, o->report);
  };
}

Action add_fit(CLI::App& root) {
  auto* app = root.add_subcommand("fit", "fit a mixture of decompositions to a fully observed tensor");
  struct Opts {
    std::string input;
    RecoveryOptions rec;
  };
  auto o = std::make_shared<Opts>();
  auto cfg = std::make_shared<ConfigFile>(app);
  cfg->bind("--input", o->input, "input tensor (.npy)");
  o->rec.add(*cfg, "fit");
  return [o, cfg] {
    const auto start = std::chrono::steady_clock::now();
    cfg->apply();
    if (o->input.empty()) throw ArgumentError("--input is required");
    const DenseTensor x = read_tensor(o->input);
    const RecoveryConfig c = o->rec.resolve(*cfg);
    const RecoveryReport r = fit(x, c);
    json report = header("fit");
    report["input"] = o->input;
    report["shape"] = x.shape();
    report.update(recovery_json(r, c, x.order()));
    save_recovery_outputs(r, o->rec.output, report);
    report["wall_time_seconds"] = seconds_since(start);
    write_report(report, o->rec.output + ".json");
  };
}

Action add_complete(CLI::App& root) {
  auto* app = root.add_subcommand("complete", "recover missing entries of a partially observed tensor");
  struct Opts {
    std::string input;
    std::string mask;
    std::string truth;
    std::optional<double> sr;
    std::uint64_t mask_seed = 0;
    RecoveryOptions rec;
  };
  auto o = std::make_shared<Opts>();
  auto cfg = std::make_shared<ConfigFile>(app);
  cfg->bind("--input", o->input, "input tensor (.npy)");
  auto* mask_opt = cfg->bind("--mask", o->mask, "binary mask tensor (.npy)");
  auto* sr_opt = cfg->bind("--sr", o->sr, "sampling rate for a generated mask");
  cfg->bind("--mask-seed", o->mask_seed, "seed of the generated mask");
  cfg->bind("--truth", o->truth, "reference tensor for metrics (.npy)");
  mask_opt->excludes(sr_opt);
  o->rec.add(*cfg, "complete");
  return [o, cfg] {
    const auto start = std::chrono::steady_clock::now();
    cfg->apply();
    if (o->input.empty()) throw ArgumentError("--input is required");
    if (o->mask.empty() == !o->sr.has_value()) throw ArgumentError("exactly one of --mask and --sr is required");
    const DenseTensor x = read_tensor(o->input);
    const RecoveryConfig c = o->rec.resolve(*cfg);
    json report = header("complete");
    report["input"] = o->input;
    report["shape"] = x.shape();
    DenseTensor mask;
    std::optional<DenseTensor> truth;
    if (o->sr) {
      mask = gen_mask(x.shape(), *o->sr, o->mask_seed);
      truth = x;
      write_tensor(o->rec.output + ".mask.npy", mask);
      report["mask"] = {{"sampling_rate", *o->sr}, {"seed", o->mask_seed}, {"path", o->rec.output + ".mask.npy"}};
    } else {
      mask = read_tensor(o->mask);
      report["mask"] = {{"path", o->mask}};
    }
    if (!o->truth.empty()) {
      truth = read_tensor(o->truth);
      report["truth"] = o->truth;
    }
    const RecoveryReport r = recover(x, mask, c, truth ? &*truth : nullptr);
    report["metrics_reference"] = truth ? "truth" : "observed";
    report.update(recovery_json(r, c, x.order()));
    save_recovery_outputs(r, o->rec.output, report);
    report["outputs"]["report"] = o->rec.output + ".json";
    report["wall_time_seconds"] = seconds_since(start);
    write_report(report, o->rec.output + ".json");
  };
}

Action add_metrics(CLI::App& root) {
  auto* app = root.add_subcommand("metrics", "compare an estimate with a reference tensor");
  struct Opts {
    std::string truth;
    std::string estimate;
    std::string model;
    std::string report;
  };
  auto o = std::make_shared<Opts>();
  auto cfg = std::make_shared<ConfigFile>(app);
  cfg->accept_threads();
  cfg->bind("--truth", o->truth, "reference tensor (.npy)");
  cfg->bind("--estimate", o->estimate, "estimated tensor (.npy)");
  cfg->bind("--model", o->model, "model container for the compression rate");
  cfg->bind("--report", o->report, "report path (default stdout)");
  return [o, cfg] {
    const auto start = std::chrono::steady_clock::now();
    cfg->apply();
    if (o->truth.empty() || o->estimate.empty()) throw ArgumentError("--truth and --estimate are required");
    const DenseTensor t = read_tensor(o->truth);
    const DenseTensor e = read_tensor(o->estimate);
    json report = header("metrics");
    report["truth"] = o->truth;
    report["estimate"] = o->estimate;
    json m = {{"re", number(metric_re(t, e))}, {"psnr", number(metric_psnr(t, e))}, {"ssim", number(metric_ssim(t, e))}};
    if (!o->model.empty()) {
      const ModelArchive a = load_model(o->model);
      m["cr"] = number(metric_cr(a.candidates, GateWeights{a.gate_weights, a.support}, t.size()));
      report["model"] = o->model;
    }
    report["metrics"] = m;
    report["wall_time_seconds"] = seconds_since(start);
    write_report(report, o->report);
  };
}

Action add_bound(CLI::App& root) {
  auto* app = root.add_subcommand("bound", "evaluate the mixture approximation error bound");
  struct Opts {
    std::string input;
    double tau = 0.95;
    std::string lambdas = "0.333333333333333333,0.333333333333333333,0.333333333333333333";
    std::string tucker_ranks;
    std::string fctn_ranks;
    std::optional<std::size_t> tubal;
    std::optional<std::size_t> latent;
    std::string report;
  };
  auto o = std::make_shared<Opts>();
  auto cfg = std::make_shared<ConfigFile>(app);
  cfg->accept_threads();
  cfg->bind("--input", o->input, "third-order tensor (.npy)");
  cfg->bind("--tau", o->tau, "energy threshold for estimated ranks");
  cfg->bind("--lambdas", o->lambdas, "gate weights for Tucker, FCTN and TF");
  cfg->bind("--tucker-ranks", o->tucker_ranks, "override Tucker ranks R1,R2,R3");
  cfg->bind("--fctn-ranks", o->fctn_ranks, "override FCTN ranks R12,R13,R23");
  cfg->bind("--tubal", o->tubal, "override the TF tubal rank");
  cfg->bind("--latent", o->latent, "override the TF latent dimension");
  cfg->bind("--report", o->report, "report path (default stdout)");
  return [o, cfg] {
    const auto start = std::chrono::steady_clock::now();
    cfg->apply();
    if (o->input.empty()) throw ArgumentError("--input is required");
    const DenseTensor x = read_tensor(o->input);
    if (x.order() != 3) throw ArgumentError("bound requires a third-order tensor");
    RankEstimate r = estimate_ranks(x, EnergyThresholds::uniform(o->tau));
    if (!o->tucker_ranks.empty()) {
      const Shape t = parse_shape(o->tucker_ranks);
      if (t.size() != 3) throw ArgumentError("--tucker-ranks needs three values");
      r.tucker_ranks.assign(t.begin(), t.end());
    }
    if (!o->fctn_ranks.empty()) {
      const Shape f = parse_shape(o->fctn_ranks);
      if (f.size() != 3) throw ArgumentError("--fctn-ranks needs three values");
      r.fctn_ranks.set(0, 1, f[0]);
      r.fctn_ranks.set(0, 2, f[1]);
      r.fctn_ranks.set(1, 2, f[2]);
    }
    if (o->tubal) r.tf->tubal_rank = *o->tubal;
    if (o->latent) {
      const RankEstimate full = estimate_ranks(x, EnergyThresholds::uniform(1.0));
      if (*o->latent > static_cast<std::size_t>(full.tf->transform_init.cols())) {
        throw ArgumentError("--latent exceeds the mode-3 dimension");
      }
      r.tf->latent_dim = *o->latent;
      r.tf->transform_init = full.tf->transform_init.leftCols(static_cast<Eigen::Index>(*o->latent));
    }
    const std::vector<double> l = parse_doubles(o->lambdas);
    if (l.size() != 3) throw ArgumentError("--lambdas needs three values");
    double sum = 0.0;
    for (double v : l) {
      if (!(v >= 0.0)) throw ArgumentError("--lambdas must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("--lambdas must sum to 1");
    GateWeights w{l, {}};
    for (std::size_t i = 0; i < 3; ++i) {
      if (l[i] > 0.0) w.support.push_back(i);
    }
    json report = header("bound");
    report["input"] = o->input;
    report["tau"] = o->tau;
    report["ranks"] = ranks_json(r);
    report["lambdas"] = l;
    report["bound"] = number(error_bound_rhs(x, r, w));
    report["wall_time_seconds"] = seconds_since(start);
    write_report(report, o->report);
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-of-experts tensor decomposition search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tenexp 0.1.0");
  std::vector<std::pair<CLI::App*, Action>> actions;
  for (auto add : {add_synth, add_estimate_ranks, add_fit, add_complete, add_metrics, add_bound}) {
    const std::size_t before = app.get_subcommands({}).size();
    Action action = add(app);
    actions.emplace_back(app.get_subcommands({}).at(before), std::move(action));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (auto& [sub, action] : actions) {
      if (sub->parsed()) action();
    }
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateInputError& e) {
    std::cerr << "degenerate input: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
