#include "kerrsim/config.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kerrsim/errors.hpp"

namespace kerrsim {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxDnOverN = 0.7071067811865476;  // 1/sqrt(2), rounded up one ulp

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

double get_number(const ordered_json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

long long get_integer(const ordered_json& j, const std::string& path) {
  if (j.is_number_unsigned()) {
    const uint64_t v = j.get<uint64_t>();
    if (v > static_cast<uint64_t>(std::numeric_limits<long long>::max())) {
      fail(path, "integer out of range");
    }
    return static_cast<long long>(v);
  }
  if (j.is_number_integer()) return j.get<long long>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && std::trunc(v) == v && std::fabs(v) <= 9.007199254740992e15) {
      return static_cast<long long>(v);
    }
  }
  fail(path, "must be an integer");
}

uint64_t get_seed(const ordered_json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<uint64_t>();
  if (j.is_number_integer()) {
    const long long v = j.get<long long>();
    if (v >= 0) return static_cast<uint64_t>(v);
  }
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && std::trunc(v) == v && v >= 0.0 && v <= 9.007199254740992e15) {
      return static_cast<uint64_t>(v);
    }
  }
  fail(path, "must be a non-negative 64-bit integer");
}

bool get_bool(const ordered_json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "must be a boolean");
  return j.get<bool>();
}

std::string get_string(const ordered_json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "must be a string");
  return j.get<std::string>();
}

std::vector<double> get_number_array(const ordered_json& j, const std::string& path,
                                     std::size_t min_size) {
  if (!j.is_array()) fail(path, "must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  if (out.size() < min_size) {
    fail(path, "need at least " + std::to_string(min_size) + " values");
  }
  return out;
}

// Consumes keys from a JSON object and rejects anything left over, so every
// typo and misplaced section fails loudly with its field path.
class ObjectReader {
 public:
  ObjectReader(const ordered_json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) fail(path_, "must be an object");
  }

  const ordered_json* take(const std::string& key) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const ordered_json& require(const std::string& key) {
    const ordered_json* j = take(key);
    if (!j) fail(path_ + "." + key, "required");
    return *j;
  }

  void forbid(const std::string& key, const std::string& why) {
    if (obj_.contains(key)) fail(path_ + "." + key, why);
    seen_.push_back(key);
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      bool known = false;
      for (const std::string& k : seen_) {
        if (k == item.key()) {
          known = true;
          break;
        }
      }
      if (!known) fail(path_ + "." + item.key(), "unknown key");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const ordered_json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
};

EnsembleSpec parse_ensemble(const ordered_json& j, const std::string& config_dir) {
  ObjectReader r(j, "ensemble");
  EnsembleSpec spec;
  spec.kind = get_string(r.require("kind"), "ensemble.kind");
  if (spec.kind == "poissonian") {
    spec.mean_n = get_number(r.require("mean_n"), "ensemble.mean_n");
    if (!(spec.mean_n > 0.0)) fail("ensemble.mean_n", "must be > 0");
    if (const ordered_json* t = r.take("tail_mass_bound")) {
      spec.tail_mass_bound = get_number(*t, "ensemble.tail_mass_bound");
    }
    if (!(spec.tail_mass_bound > 0.0 && spec.tail_mass_bound <= 1e-6)) {
      fail("ensemble.tail_mass_bound", "must be within (0, 1e-6]");
    }
    r.forbid("depth", "only valid for sine_modulated");
    r.forbid("target_std", "only valid for sine_modulated");
    r.forbid("shot_noise", "only valid for sine_modulated");
    r.forbid("nodes", "only valid for sine_modulated");
    r.forbid("path", "only valid for pmf_file");
    r.forbid("entries", "only valid for pmf_inline");
  } else if (spec.kind == "sine_modulated") {
    spec.mean_n = get_number(r.require("mean_n"), "ensemble.mean_n");
    if (!(spec.mean_n > 0.0)) fail("ensemble.mean_n", "must be > 0");
    const ordered_json* depth = r.take("depth");
    const ordered_json* target = r.take("target_std");
    if ((depth == nullptr) == (target == nullptr)) {
      fail("ensemble", "provide exactly one of depth or target_std");
    }
    if (depth) {
      spec.depth = get_number(*depth, "ensemble.depth");
      if (!(*spec.depth >= 0.0 && *spec.depth <= 1.0)) {
        fail("ensemble.depth", "must be within [0, 1]");
      }
    } else {
      spec.target_std = get_number(*target, "ensemble.target_std");
      if (!(*spec.target_std >= 0.0)) fail("ensemble.target_std", "must be >= 0");
    }
    if (const ordered_json* s = r.take("shot_noise")) {
      spec.shot_noise = get_bool(*s, "ensemble.shot_noise");
    }
    if (const ordered_json* n = r.take("nodes")) {
      const long long nodes = get_integer(*n, "ensemble.nodes");
      if (nodes < 64 || nodes > 1 << 20) fail("ensemble.nodes", "must be within [64, 1048576]");
      spec.nodes = static_cast<int>(nodes);
    }
    r.forbid("tail_mass_bound", "only valid for poissonian");
    r.forbid("path", "only valid for pmf_file");
    r.forbid("entries", "only valid for pmf_inline");
  } else if (spec.kind == "pmf_file") {
    spec.path = get_string(r.require("path"), "ensemble.path");
    if (spec.path.empty()) fail("ensemble.path", "must not be empty");
    std::filesystem::path p(spec.path);
    if (p.is_relative() && !config_dir.empty()) {
      spec.path = (std::filesystem::path(config_dir) / p).string();
    }
    r.forbid("mean_n", "not valid for pmf_file (the file defines the distribution)");
    r.forbid("depth", "only valid for sine_modulated");
    r.forbid("target_std", "only valid for sine_modulated");
    r.forbid("shot_noise", "only valid for sine_modulated");
    r.forbid("nodes", "only valid for sine_modulated");
    r.forbid("tail_mass_bound", "only valid for poissonian");
    r.forbid("entries", "only valid for pmf_inline");
  } else if (spec.kind == "pmf_inline") {
    const ordered_json& entries = r.require("entries");
    if (!entries.is_array() || entries.empty()) {
      fail("ensemble.entries", "must be a non-empty array of [n, weight] pairs");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string p = "ensemble.entries[" + std::to_string(i) + "]";
      if (!entries[i].is_array() || entries[i].size() != 2) fail(p, "must be a [n, weight] pair");
      spec.entries.emplace_back(get_number(entries[i][0], p + "[0]"),
                                get_number(entries[i][1], p + "[1]"));
    }
    r.forbid("mean_n", "not valid for pmf_inline (entries define the distribution)");
    r.forbid("depth", "only valid for sine_modulated");
    r.forbid("target_std", "only valid for sine_modulated");
    r.forbid("shot_noise", "only valid for sine_modulated");
    r.forbid("nodes", "only valid for sine_modulated");
    r.forbid("tail_mass_bound", "only valid for poissonian");
    r.forbid("path", "only valid for pmf_file");
  } else {
    fail("ensemble.kind",
         "must be one of poissonian, sine_modulated, pmf_file, pmf_inline");
  }
  r.finish();
  return spec;
}

InteractionParams parse_interaction(const ordered_json& j) {
  ObjectReader r(j, "interaction");
  InteractionParams params;
  if (const ordered_json* g = r.take("g")) params.g = get_number(*g, "interaction.g");
  if (const ordered_json* gs = r.take("g_s")) params.g_s = get_number(*gs, "interaction.g_s");
  params.epsilon = get_number(r.require("epsilon"), "interaction.epsilon");
  if (!(params.epsilon > 0.0 && params.epsilon < kPi)) {
    fail("interaction.epsilon", "must be within (0, pi)");
  }
  r.finish();
  return params;
}

TrialSpec parse_trials(const ordered_json& j) {
  ObjectReader r(j, "trials");
  TrialSpec spec;
  spec.total = get_integer(r.require("total"), "trials.total");
  if (spec.total < 1) fail("trials.total", "must be >= 1");
  if (const ordered_json* n = r.take("readout_noise_std")) {
    spec.readout_noise_std = get_number(*n, "trials.readout_noise_std");
    if (!(spec.readout_noise_std >= 0.0)) fail("trials.readout_noise_std", "must be >= 0");
  }
  r.finish();
  return spec;
}

SweepSpec parse_sweep(const ordered_json& j, const std::string& command) {
  ObjectReader r(j, "sweep");
  SweepSpec spec;
  if (command == "sweep-g") {
    const ordered_json* g_values = r.take("g_values");
    const ordered_json* delay = r.take("delay");
    const ordered_json* tau_values = r.take("tau_values");
    if (delay || tau_values) {
      if (g_values) fail("sweep", "provide either g_values or delay + tau_values, not both");
      if (!delay) fail("sweep.delay", "required alongside tau_values");
      if (!tau_values) fail("sweep.tau_values", "required alongside delay");
      ObjectReader d(*delay, "sweep.delay");
      DelayModel model;
      model.g_peak = get_number(d.require("g_peak"), "sweep.delay.g_peak");
      model.tau_c = get_number(d.require("tau_c"), "sweep.delay.tau_c");
      if (!(model.tau_c > 0.0)) fail("sweep.delay.tau_c", "must be > 0");
      d.finish();
      spec.delay = model;
      spec.tau_values = get_number_array(*tau_values, "sweep.tau_values", 5);
    } else {
      if (!g_values) fail("sweep.g_values", "required");
      spec.g_values = get_number_array(*g_values, "sweep.g_values", 3);
    }
    r.forbid("dn_values", "only valid for sweep-dn");
    r.forbid("eps_values", "only valid for sweep-eps");
  } else if (command == "sweep-dn") {
    spec.dn_values = get_number_array(r.require("dn_values"), "sweep.dn_values", 3);
    for (std::size_t i = 0; i < spec.dn_values.size(); ++i) {
      if (!(spec.dn_values[i] > 0.0)) {
        fail("sweep.dn_values[" + std::to_string(i) + "]", "must be > 0");
      }
    }
    r.forbid("g_values", "only valid for sweep-g");
    r.forbid("delay", "only valid for sweep-g");
    r.forbid("tau_values", "only valid for sweep-g");
    r.forbid("eps_values", "only valid for sweep-eps");
  } else {  // sweep-eps
    spec.eps_values = get_number_array(r.require("eps_values"), "sweep.eps_values", 3);
    for (std::size_t i = 0; i < spec.eps_values.size(); ++i) {
      if (!(spec.eps_values[i] > 0.0 && spec.eps_values[i] < kPi)) {
        fail("sweep.eps_values[" + std::to_string(i) + "]", "must be within (0, pi)");
      }
    }
    r.forbid("g_values", "only valid for sweep-g");
    r.forbid("delay", "only valid for sweep-g");
    r.forbid("tau_values", "only valid for sweep-g");
    r.forbid("dn_values", "only valid for sweep-dn");
  }
  r.finish();
  return spec;
}

ScalingSpec parse_scaling(const ordered_json& j) {
  ObjectReader r(j, "scaling");
  ScalingSpec spec;
  spec.grid = get_number_array(r.require("grid"), "scaling.grid", 4);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    if (!(spec.grid[i] > 0.0)) fail("scaling.grid[" + std::to_string(i) + "]", "must be > 0");
    if (i > 0 && !(spec.grid[i] > spec.grid[i - 1])) {
      fail("scaling.grid", "values must be strictly ascending");
    }
  }
  if (!(spec.grid.back() >= 3.0 * spec.grid.front())) {
    fail("scaling.grid", "must span at least a factor of 3");
  }
  const std::string policy = get_string(r.require("policy"), "scaling.policy");
  if (policy == "proportional") {
    spec.policy = VariancePolicy::proportional;
  } else if (policy == "poissonian") {
    spec.policy = VariancePolicy::poissonian;
  } else {
    fail("scaling.policy", "must be proportional or poissonian");
  }
  if (const ordered_json* d = r.take("dn_over_n")) {
    spec.options.dn_over_n = get_number(*d, "scaling.dn_over_n");
  }
  if (!(spec.options.dn_over_n > 0.0 && spec.options.dn_over_n <= kMaxDnOverN)) {
    fail("scaling.dn_over_n", "must be within (0, 1/sqrt(2)]");
  }
  std::string span_mode = "automatic";
  if (const ordered_json* s = r.take("span_mode")) {
    span_mode = get_string(*s, "scaling.span_mode");
  }
  if (span_mode == "automatic") {
    spec.options.span_mode = SpanMode::automatic;
    r.forbid("span_abs", "only valid when span_mode is fixed");
  } else if (span_mode == "fixed") {
    spec.options.span_mode = SpanMode::fixed;
    spec.options.span_abs = get_number(r.require("span_abs"), "scaling.span_abs");
    if (!(spec.options.span_abs > 0.0)) fail("scaling.span_abs", "must be > 0");
  } else {
    fail("scaling.span_mode", "must be automatic or fixed");
  }
  if (const ordered_json* n = r.take("nodes")) {
    const long long nodes = get_integer(*n, "scaling.nodes");
    if (nodes < 64 || nodes > 1 << 20) fail("scaling.nodes", "must be within [64, 1048576]");
    spec.options.ensemble_nodes = static_cast<int>(nodes);
  }
  if (const ordered_json* t = r.take("tail_mass_bound")) {
    spec.options.tail_mass_bound = get_number(*t, "scaling.tail_mass_bound");
  }
  if (!(spec.options.tail_mass_bound > 0.0 && spec.options.tail_mass_bound <= 1e-6)) {
    fail("scaling.tail_mass_bound", "must be within (0, 1e-6]");
  }
  if (const ordered_json* m = r.take("min_nu_for_fit")) {
    spec.options.min_nu_for_fit = get_integer(*m, "scaling.min_nu_for_fit");
  }
  if (spec.options.min_nu_for_fit < 2) fail("scaling.min_nu_for_fit", "must be >= 2");
  r.finish();
  return spec;
}

FisherSpec parse_fisher(const ordered_json& j) {
  ObjectReader r(j, "fisher");
  FisherSpec spec;
  spec.n_values = get_number_array(r.require("n_values"), "fisher.n_values", 1);
  for (std::size_t i = 0; i < spec.n_values.size(); ++i) {
    if (!(spec.n_values[i] > 0.0)) {
      fail("fisher.n_values[" + std::to_string(i) + "]", "must be > 0");
    }
  }
  r.finish();
  return spec;
}

OutputSpec parse_output(const ordered_json& j) {
  ObjectReader r(j, "output");
  OutputSpec spec;
  if (const ordered_json* d = r.take("dir")) {
    spec.dir = get_string(*d, "output.dir");
    if (spec.dir.empty()) fail("output.dir", "must not be empty");
  }
  if (const ordered_json* p = r.take("prefix")) {
    spec.prefix = get_string(*p, "output.prefix");
    if (spec.prefix.empty()) fail("output.prefix", "must not be empty");
    if (spec.prefix.find('/') != std::string::npos ||
        spec.prefix.find('\\') != std::string::npos) {
      fail("output.prefix", "must not contain path separators");
    }
  }
  r.finish();
  return spec;
}

}  // namespace

CampaignConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t stop = e.byte > 0 ? std::min(text.size(), static_cast<std::size_t>(e.byte) - 1)
                                        : 0;
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                     e.what());
  }

  ObjectReader root(j, "config");
  CampaignConfig config;
  config.source_path = path;
  config.command = get_string(root.require("command"), "command");
  const bool known_command = config.command == "batch" || config.command == "sweep-g" ||
                             config.command == "sweep-dn" || config.command == "sweep-eps" ||
                             config.command == "scaling" || config.command == "fisher";
  if (!known_command) {
    fail("command", "must be one of batch, sweep-g, sweep-dn, sweep-eps, scaling, fisher");
  }
  config.seed = get_seed(root.require("seed"), "seed");

  const std::string config_dir = std::filesystem::path(path).parent_path().string();
  const bool wants_ensemble = config.command != "scaling";
  if (wants_ensemble) {
    config.ensemble = parse_ensemble(root.require("ensemble"), config_dir);
  } else {
    root.forbid("ensemble", "the scaling command builds its ensembles from scaling.policy");
  }
  config.interaction = parse_interaction(root.require("interaction"));
  config.trials = parse_trials(root.require("trials"));

  if (config.command == "sweep-g" || config.command == "sweep-dn" ||
      config.command == "sweep-eps") {
    config.sweep = parse_sweep(root.require("sweep"), config.command);
  } else {
    root.forbid("sweep", "only valid for the sweep-g/sweep-dn/sweep-eps commands");
  }
  if (config.command == "scaling") {
    config.scaling = parse_scaling(root.require("scaling"));
  } else {
    root.forbid("scaling", "only valid for the scaling command");
  }
  if (config.command == "fisher") {
    config.fisher = parse_fisher(root.require("fisher"));
  } else {
    root.forbid("fisher", "only valid for the fisher command");
  }
  if (const ordered_json* out = root.take("output")) config.output = parse_output(*out);
  root.finish();

  if (config.command == "sweep-dn" && config.ensemble.kind != "sine_modulated") {
    fail("ensemble.kind", "sweep-dn requires a sine_modulated ensemble");
  }
  if (config.command == "fisher" && config.ensemble.kind != "poissonian" &&
      config.ensemble.kind != "sine_modulated") {
    fail("ensemble.kind", "fisher requires a parametric ensemble (poissonian or sine_modulated)");
  }
  return config;
}

std::string config_echo_json(const CampaignConfig& config) {
  ordered_json j;
  j["command"] = config.command;
  j["seed"] = config.seed;
  if (config.command != "scaling") {
    ordered_json e;
    e["kind"] = config.ensemble.kind;
    if (config.ensemble.kind == "poissonian") {
      e["mean_n"] = config.ensemble.mean_n;
      e["tail_mass_bound"] = config.ensemble.tail_mass_bound;
    } else if (config.ensemble.kind == "sine_modulated") {
      e["mean_n"] = config.ensemble.mean_n;
      if (config.ensemble.depth) e["depth"] = *config.ensemble.depth;
      if (config.ensemble.target_std) e["target_std"] = *config.ensemble.target_std;
      e["shot_noise"] = config.ensemble.shot_noise;
      e["nodes"] = config.ensemble.nodes;
    } else if (config.ensemble.kind == "pmf_file") {
      e["path"] = config.ensemble.path;
    } else {
      ordered_json entries = ordered_json::array();
      for (const auto& [n, w] : config.ensemble.entries) {
        entries.push_back(ordered_json::array({n, w}));
      }
      e["entries"] = std::move(entries);
    }
    j["ensemble"] = std::move(e);
  }
  j["interaction"] = {{"g", config.interaction.g},
                      {"g_s", config.interaction.g_s},
                      {"epsilon", config.interaction.epsilon}};
  j["trials"] = {{"total", config.trials.total},
                 {"readout_noise_std", config.trials.readout_noise_std}};
  if (config.command == "sweep-g") {
    ordered_json s;
    if (config.sweep.delay) {
      s["delay"] = {{"g_peak", config.sweep.delay->g_peak}, {"tau_c", config.sweep.delay->tau_c}};
      s["tau_values"] = config.sweep.tau_values;
    } else {
      s["g_values"] = config.sweep.g_values;
    }
    j["sweep"] = std::move(s);
  } else if (config.command == "sweep-dn") {
    j["sweep"] = {{"dn_values", config.sweep.dn_values}};
  } else if (config.command == "sweep-eps") {
    j["sweep"] = {{"eps_values", config.sweep.eps_values}};
  } else if (config.command == "scaling") {
    ordered_json s;
    s["grid"] = config.scaling.grid;
    s["policy"] =
        config.scaling.policy == VariancePolicy::proportional ? "proportional" : "poissonian";
    s["dn_over_n"] = config.scaling.options.dn_over_n;
    s["span_mode"] = config.scaling.options.span_mode == SpanMode::fixed ? "fixed" : "automatic";
    if (config.scaling.options.span_mode == SpanMode::fixed) {
      s["span_abs"] = config.scaling.options.span_abs;
    }
    s["nodes"] = config.scaling.options.ensemble_nodes;
    s["tail_mass_bound"] = config.scaling.options.tail_mass_bound;
    s["min_nu_for_fit"] = config.scaling.options.min_nu_for_fit;
    j["scaling"] = std::move(s);
  } else if (config.command == "fisher") {
    j["fisher"] = {{"n_values", config.fisher.n_values}};
  }
  j["output"] = {{"dir", config.output.dir}, {"prefix", config.output.prefix}};
  return j.dump(2);
}

ProbeEnsemble build_ensemble(const EnsembleSpec& spec) {
  return build_ensemble_at(spec, spec.mean_n);
}

ProbeEnsemble build_ensemble_at(const EnsembleSpec& spec, double mean_n) {
  if (spec.kind == "poissonian") return poissonian(mean_n, spec.tail_mass_bound);
  if (spec.kind == "sine_modulated") {
    double depth = 0.0;
    if (spec.depth) {
      depth = *spec.depth;
    } else {
      // Rescaling keeps the shape: the std target scales with the mean.
      const double target = *spec.target_std * (mean_n / spec.mean_n);
      depth = depth_for_std(mean_n, target, spec.shot_noise);
    }
    return sine_modulated(mean_n, depth, spec.shot_noise, spec.nodes);
  }
  if (spec.kind == "pmf_file") {
    if (mean_n != spec.mean_n) {
      throw ValidationError("ensemble.kind: a pmf_file ensemble cannot be rescaled");
    }
    return from_pmf_file(spec.path);
  }
  if (spec.kind == "pmf_inline") {
    if (mean_n != spec.mean_n) {
      throw ValidationError("ensemble.kind: a pmf_inline ensemble cannot be rescaled");
    }
    return from_pmf(spec.entries);
  }
  throw ValidationError("ensemble.kind: unknown ensemble kind");
}

}  // namespace kerrsim
