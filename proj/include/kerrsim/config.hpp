#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kerrsim/experiments.hpp"
#include "kerrsim/probe.hpp"
#include "kerrsim/quantum.hpp"

namespace kerrsim {

struct EnsembleSpec {
  std::string kind;  // poissonian | sine_modulated | pmf_file | pmf_inline
  double mean_n = 0.0;
  std::optional<double> depth;       // sine_modulated: one of depth/target_std
  std::optional<double> target_std;  // photons; depth derived via depth_for_std
  bool shot_noise = true;
  int nodes = 128;
  double tail_mass_bound = 1e-9;
  std::string path;  // pmf_file
  std::vector<std::pair<double, double>> entries;  // pmf_inline
};

struct TrialSpec {
  long long total = 0;
  double readout_noise_std = 0.0;
};

struct SweepSpec {
  std::vector<double> g_values;
  std::vector<double> dn_values;
  std::vector<double> eps_values;
  std::optional<DelayModel> delay;
  std::vector<double> tau_values;
};

struct ScalingSpec {
  std::vector<double> grid;
  VariancePolicy policy = VariancePolicy::proportional;
  ScalingOptions options;
};

struct FisherSpec {
  // Per N the ensemble is rebuilt at this mean with the configured shape
  // (depth/shot for sine, sqrt(N) for poissonian).
  std::vector<double> n_values;
};

struct OutputSpec {
  std::string dir = ".";
  std::string prefix = "run";
};

struct CampaignConfig {
  std::string command;  // sweep-g | sweep-dn | sweep-eps | scaling | fisher | batch
  uint64_t seed = 0;
  EnsembleSpec ensemble;
  InteractionParams interaction;
  TrialSpec trials;
  SweepSpec sweep;
  ScalingSpec scaling;
  FisherSpec fisher;
  OutputSpec output;
  std::string source_path;  // where the config was loaded from
};

// Parses and fully validates a JSON campaign config; defaults resolved.
// Throws ParseError with line/column on malformed text and ValidationError
// naming the offending field path and constraint otherwise. Seeds are
// mandatory: there is no wall-clock fallback.
CampaignConfig load_config(const std::string& path);

// The resolved config as canonical JSON text (the echo embedded in every
// metadata file; reloading it reproduces the run).
std::string config_echo_json(const CampaignConfig& config);

// Builds the probe ensemble described by the spec (at its configured mean).
ProbeEnsemble build_ensemble(const EnsembleSpec& spec);

// Same shape rescaled to a different mean (fisher command sweeps).
ProbeEnsemble build_ensemble_at(const EnsembleSpec& spec, double mean_n);

}  // namespace kerrsim
