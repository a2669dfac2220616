#pragma once

#include <cstdint>
#include <vector>

#include "kerrsim/estimation.hpp"
#include "kerrsim/probe.hpp"
#include "kerrsim/quantum.hpp"

namespace kerrsim {

struct TrialConfig {
  ProbeEnsemble ensemble;
  InteractionParams params;
  long long total_trials = 0;      // interaction uses
  double readout_noise_std = 0.0;  // additive Gaussian on the recorded reading, photons
  uint64_t seed = 0;
};

// Aggregate over the post-selected trials. sigma is the standard deviation
// (Bessel-corrected) of readings normalized by the ensemble mean, so
// standard_error = sigma/sqrt(postselected_count) is directly the standard
// error of delta_n_normalized and 2*sigma/(s*sqrt(nu)) is in radians.
struct TrialBatch {
  long long postselected_count = 0;  // nu
  double mean_n = 0.0;               // mean kept reading, photons
  double delta_n_normalized = 0.0;   // (mean_n - ensemble mean)/ensemble mean
  double sigma = 0.0;
  double standard_error = 0.0;
  long long clamped_samples = 0;     // continuous draws clamped at zero
};

// Per trial: draw an intensity, keep with the exact probability
// sin^2((g n + eps)/2), record n plus readout noise when kept. Each trial
// consumes its own counter-based stream indexed by the global trial number,
// and trials are aggregated in fixed 65536-trial chunks merged in chunk
// order, so the result is bit-identical for any worker count.
// workers = 0 means hardware concurrency.
// Throws NoPostselectedTrials when nothing survives post-selection.
TrialBatch run_batch(const TrialConfig& config, int workers = 0);

// Independent repetitions: replication r runs with a seed derived from
// (config.seed, r) in a dedicated derivation domain, so the list is
// reproducible and extending it keeps earlier entries unchanged.
// Requires replications >= 2.
std::vector<TrialBatch> replicate(const TrialConfig& config, int replications, int workers = 0);

}  // namespace kerrsim
