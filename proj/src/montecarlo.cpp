#include "kerrsim/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "kerrsim/errors.hpp"
#include "kerrsim/rng.hpp"
#include "kerrsim/summation.hpp"

namespace kerrsim {
namespace {

// Trials are aggregated in fixed-size chunks whose partial sums are merged
// in chunk order regardless of which worker produced them, so the full
// reduction tree is independent of the worker count.
constexpr long long kChunk = 65536;

struct ChunkPartial {
  CompensatedSum sum_y;   // normalized readings
  CompensatedSum sum_y2;  // their squares
  long long kept = 0;
  long long clamped = 0;
};

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace

TrialBatch run_batch(const TrialConfig& config, int workers) {
  if (config.total_trials < 1) throw ValidationError("total_trials must be >= 1");
  if (!(std::isfinite(config.readout_noise_std) && config.readout_noise_std >= 0.0)) {
    throw ValidationError("readout_noise_std must be >= 0");
  }
  const Moments m = moments(config.ensemble);
  if (!(m.mean_n > 0.0)) throw ValidationError("ensemble mean intensity must be > 0");

  // g = 0 makes the success probability intensity-independent; hoisting it
  // is bit-identical to the per-trial evaluation because g*n contributes
  // exactly zero to the half angle.
  const bool constant_p = config.params.g == 0.0;
  const double p_const = constant_p ? postselect_prob_exact_intensity(0.0, config.params) : 0.0;
  const double mean = m.mean_n;
  const double noise = config.readout_noise_std;

  const long long total = config.total_trials;
  const long long chunk_count = (total + kChunk - 1) / kChunk;
  std::vector<ChunkPartial> parts(static_cast<std::size_t>(chunk_count));

  auto run_chunk = [&](long long chunk) {
    ChunkPartial& part = parts[static_cast<std::size_t>(chunk)];
    SampleStats stats;
    const long long begin = chunk * kChunk;
    const long long end = std::min(total, begin + kChunk);
    for (long long t = begin; t < end; ++t) {
      RandomStream rng(config.seed, static_cast<uint64_t>(t), StreamDomain::trial);
      const double n = sample(config.ensemble, rng, &stats);
      const double p = constant_p ? p_const : postselect_prob_exact_intensity(n, config.params);
      if (rng.uniform() < p) {
        double reading = n;
        if (noise > 0.0) reading += noise * rng.normal();
        const double y = (reading - mean) / mean;
        part.sum_y.add(y);
        part.sum_y2.add(y * y);
        ++part.kept;
      }
    }
    part.clamped = stats.clamped;
  };

  const int worker_count =
      static_cast<int>(std::min<long long>(resolve_workers(workers), chunk_count));
  if (worker_count <= 1) {
    for (long long c = 0; c < chunk_count; ++c) run_chunk(c);
  } else {
    std::atomic<long long> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      try {
        for (;;) {
          const long long c = next.fetch_add(1);
          if (c >= chunk_count) return;
          run_chunk(c);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  CompensatedSum sum_y, sum_y2;
  long long kept = 0, clamped = 0;
  for (const ChunkPartial& part : parts) {
    sum_y.merge(part.sum_y);
    sum_y2.merge(part.sum_y2);
    kept += part.kept;
    clamped += part.clamped;
  }
  if (kept == 0) throw NoPostselectedTrials("no trials survived post-selection");

  TrialBatch batch;
  batch.postselected_count = kept;
  batch.clamped_samples = clamped;
  const double y_bar = sum_y.value() / static_cast<double>(kept);
  batch.delta_n_normalized = y_bar;
  batch.mean_n = mean * (1.0 + y_bar);
  if (kept >= 2) {
    const double var =
        (sum_y2.value() - y_bar * sum_y.value()) / static_cast<double>(kept - 1);
    batch.sigma = std::sqrt(std::max(0.0, var));
  }
  batch.standard_error = batch.sigma / std::sqrt(static_cast<double>(kept));
  return batch;
}

std::vector<TrialBatch> replicate(const TrialConfig& config, int replications, int workers) {
  if (replications < 2) throw ValidationError("replications must be >= 2");
  std::vector<TrialBatch> batches;
  batches.reserve(static_cast<std::size_t>(replications));
  TrialConfig run = config;
  for (int r = 0; r < replications; ++r) {
    run.seed = derive_seed(config.seed, static_cast<uint64_t>(r));
    batches.push_back(run_batch(run, workers));
  }
  return batches;
}

}  // namespace kerrsim
