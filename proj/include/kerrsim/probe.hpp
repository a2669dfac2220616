#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kerrsim/rng.hpp"

namespace kerrsim {

struct Moments {
  double mean_n = 0.0;  // photons
  double std_dn = 0.0;  // photons, >= 0
};

// One pure component of the classical mixture over pulse intensities:
// intensity mean_n, with Poissonian photon statistics when poissonian is
// set and a sharp (zero-variance) intensity otherwise.
struct MixtureMember {
  double mean_n = 0.0;
  double weight = 0.0;
  bool poissonian = false;
};

// Probability mass on a grid of intensities. n values are real: integer for
// photon-counting constructions, arbitrary for delta mixtures and user pmfs.
// alias_* hold the Vose alias table built at construction so sampling is
// O(1) and consumes exactly two uniforms per draw.
struct DiscretePmf {
  std::vector<double> n;
  std::vector<double> w;  // normalized to sum 1
  std::vector<double> alias_prob;
  std::vector<uint32_t> alias_idx;
};

// Large-N representation: modulation phase theta ~ Uniform[0, 2*pi) with
// intensity mean_n*(1 - depth*sin(theta)), plus an additive Gaussian shot
// term of variance equal to the local intensity when shot_noise is set.
// Expectations are evaluated by Gauss-Legendre quadrature over theta
// (quadrature_nodes points) times Gauss-Hermite over the shot term.
struct ModulatedContinuous {
  double mean_n = 0.0;
  double depth = 0.0;  // in [0,1]
  bool shot_noise = true;
  int quadrature_nodes = 0;
};

struct ProbeEnsemble {
  std::variant<DiscretePmf, ModulatedContinuous> rep;
  // Mixture decomposition for convexity bounds. Empty for user pmfs, where
  // every pmf entry is its own zero-variance member.
  std::vector<MixtureMember> members;

  bool is_discrete() const { return rep.index() == 0; }
  const DiscretePmf& pmf() const { return std::get<DiscretePmf>(rep); }
  const ModulatedContinuous& continuous() const { return std::get<ModulatedContinuous>(rep); }
};

// Poisson photon statistics with the given mean, truncated so the omitted
// tail mass is <= tail_mass_bound (required in (0, 1e-6]). Throws
// ResourceLimit if the truncated support would exceed the entry budget.
ProbeEnsemble poissonian(double mean_n, double tail_mass_bound);

// Intensity-modulated mixture: theta ~ Uniform[0, 2*pi), pulse intensity
// mean_n*(1 - depth*sin(theta)), optionally convolved with Poissonian shot
// noise. Variance = mean_n^2*depth^2/2 + mean_n*[shot_noise]. nodes >= 64.
// Uses a discrete photon-number pmf (midpoint theta grid, per-component
// truncation at 10 sigma) up to mean_n = 1e6 and the continuous
// representation beyond, where pmf enumeration is wasteful.
ProbeEnsemble sine_modulated(double mean_n, double depth, bool shot_noise, int nodes);

// Continuous-representation constructor, exposed so both representations
// can be compared at the same mean_n.
ProbeEnsemble sine_modulated_continuous(double mean_n, double depth, bool shot_noise, int nodes);

// Modulation depth that realizes a target standard deviation:
// D = sqrt(2*(sd^2 - mean_n*[shot]))/mean_n. Throws UnreachableVariance when
// the target exceeds sqrt(mean_n^2/2 + mean_n*[shot]) (depth would exceed 1)
// and ValidationError when it is below the shot floor.
double depth_for_std(double mean_n, double target_std, bool shot_noise);

// Normalizes a user-supplied pmf. Throws EmptyDistribution when no entry has
// positive weight; negative weights are a ValidationError.
ProbeEnsemble from_pmf(const std::vector<std::pair<double, double>>& entries);

// Two-column text file (n, weight), whitespace-separated, '#' comments.
ProbeEnsemble from_pmf_file(const std::string& path);

// Exact mean and standard deviation: compensated pmf summation for the
// discrete representation, closed form for the continuous one.
Moments moments(const ProbeEnsemble& ensemble);

// Largest intensity the ensemble can produce: the top pmf support point, or
// mean_n*(1+depth) + 10*sqrt(mean_n*(1+depth)) for the continuous
// representation. Sets the validity scale n_max*g/epsilon of the linearized
// response.
double max_intensity(const ProbeEnsemble& ensemble);

struct SampleStats {
  long long clamped = 0;  // continuous draws clamped at zero intensity
};

// One intensity draw. Discrete: alias-method lookup (two uniforms).
// Continuous: uniform theta plus a Gaussian shot term, clamped at zero
// (clamps counted in stats when provided).
double sample(const ProbeEnsemble& ensemble, RandomStream& rng, SampleStats* stats = nullptr);

// Expectation of f over the ensemble (pmf summation or quadrature); f takes
// a real intensity. Shared by the estimation module's ensemble reductions.
double ensemble_expect(const ProbeEnsemble& ensemble, const std::function<double(double)>& f);

// Visits (intensity, weight) pairs covering the ensemble: pmf entries, or
// quadrature nodes (modulation phase x shot) for the continuous
// representation. Weights sum to 1; traversal order is fixed, so compensated
// reductions over a scan are reproducible.
void ensemble_scan(const ProbeEnsemble& ensemble,
                   const std::function<void(double, double)>& visit);

}  // namespace kerrsim
