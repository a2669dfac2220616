#pragma once

#include <optional>
#include <vector>

#include "kerrsim/fitting.hpp"
#include "kerrsim/montecarlo.hpp"

namespace kerrsim {

struct SweepResult {
  std::vector<double> axis_values;
  std::vector<double> delta_n_normalized;
  std::vector<double> standard_errors;
  std::vector<long long> postselected_counts;
  FitResult fit;
  // Closed-loop coupling estimate recovered from the fit, where the sweep
  // kind defines one (variance and epsilon sweeps).
  std::optional<double> recovered_g;
  std::optional<double> recovered_g_error;
};

// Delay-to-coupling model g(tau) = g_peak * exp(-tau^2/(2*tau_c^2)).
struct DelayModel {
  double g_peak = 0.0;  // rad
  double tau_c = 0.0;   // same unit as the tau axis
};

struct ScalingPoint {
  double mean_n = 0.0;   // photons
  double slope_s = 0.0;  // d(delta_n_normalized)/dg, per rad
  double sigma = 0.0;    // normalized reading std at the center point
  long long nu = 0;      // post-selections at the center point
  double delta_g = 0.0;  // 2*sigma/(slope_s*sqrt(nu)), rad
};

enum class VariancePolicy { proportional, poissonian };  // std_dn = c*N | sqrt(N)

enum class SpanMode { automatic, fixed };

struct ScalingOptions {
  double dn_over_n = 0.5;           // proportional-policy ratio c
  SpanMode span_mode = SpanMode::automatic;
  double span_abs = 0.0;            // rad, fixed-mode half-width of the g sweep
  int ensemble_nodes = 128;         // sine-mixture construction nodes
  double tail_mass_bound = 1e-9;    // Poissonian truncation
  long long min_nu_for_fit = 100;   // points below are excluded and reported
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  std::vector<double> slope_linear;    // per point: 2*std_dn^2/(eps*N)
  std::vector<bool> included_in_fit;   // false when nu < min_nu_for_fit
  FitResult fit;                       // power law delta_g vs N
};

// One batch per coupling value; linear fit of delta_n_normalized vs g
// attached (slope comparable to 2*std_dn^2/(eps*N) in the linear regime).
SweepResult sweep_coupling(const TrialConfig& base, const std::vector<double>& g_values,
                           int workers = 0);

// Delay-parameterized variant: axis is tau, coupling g(tau) from the model,
// Gaussian fit attached.
SweepResult sweep_coupling_delay(const TrialConfig& base, const DelayModel& model,
                                 const std::vector<double>& tau_values, int workers = 0);

// One batch per target std_dn, realized by re-deriving the modulation depth
// at the base ensemble's mean; linear fit of delta_n_normalized vs std_dn^2;
// recovered_g = slope*eps*N/2. Throws UnreachableVariance for targets above
// sqrt(N^2/2 + N*[shot]).
SweepResult sweep_variance(const TrialConfig& base, const std::vector<double>& dn_values,
                           int workers = 0);

// One batch per post-selection angle; linear fit of delta_n_normalized vs
// 1/eps (small-eps convention Im C_w = 1/eps); recovered_g =
// slope*N/(2*std_dn^2).
SweepResult sweep_epsilon(const TrialConfig& base, const std::vector<double>& eps_values,
                          int workers = 0);

// Precision-vs-N study. Per grid point: build the ensemble under the
// variance policy; estimate the response slope s by a symmetric five-point
// finite-difference fit of the exact analytic response over a g half-width
// of 0.5*eps/n_max (automatic mode, shrinking with N to stay linear) or
// span_abs (fixed mode, exposing slope saturation at large N); run one
// batch at the base coupling for sigma and nu; delta_g = 2*sigma/(s*sqrt(nu)).
// Power-law fit of delta_g vs N over the included points, weighted by
// relative sigma error. Requires >= 4 grid points spanning at least a
// factor of 3 in N.
ScalingResult scaling_study(const std::vector<double>& grid, VariancePolicy policy,
                            const TrialConfig& base, const ScalingOptions& options,
                            int workers = 0);

// The analytic response slope and its linear-regime prediction, exposed for
// verification: five-point finite-difference slope of
// postselected_mean_exact's delta_n_normalized around g, half-width span.
double analytic_response_slope(const ProbeEnsemble& ensemble, const InteractionParams& params,
                               double span);

}  // namespace kerrsim
