#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "kerrsim/errors.hpp"
#include "kerrsim/experiments.hpp"
#include "kerrsim/probe.hpp"

using namespace kerrsim;

namespace {

TrialConfig sweep_base(double mean, double std_dn, double eps, long long trials,
                       uint64_t seed) {
  TrialConfig cfg;
  cfg.ensemble = sine_modulated(mean, depth_for_std(mean, std_dn, true), true, 128);
  cfg.params.epsilon = eps;
  cfg.total_trials = trials;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("analytic response slope follows the half-angle cotangent law") {
  // s / s_linear = (eps/2) cot(eps/2) (1 + O(g n_max/eps)); at g = 0 the
  // only defect is the finite-difference span, well under 0.5%.
  const ProbeEnsemble ens = sine_modulated(1e3, depth_for_std(1e3, 500.0, true), true, 64);
  const Moments m = moments(ens);
  const double n_max = max_intensity(ens);
  for (double eps : {0.1, 0.5, 2.0}) {
    InteractionParams params;
    params.epsilon = eps;
    const double s_lin = 2.0 * m.std_dn * m.std_dn / (eps * m.mean_n);
    const double cot_factor = 0.5 * eps / std::tan(0.5 * eps);
    // Small span: the symmetric stencil cancels the quadratic term, and the
    // cubic residue ~ (span*N/sin(eps))^2 is negligible here.
    const double s_small = analytic_response_slope(ens, params, 0.02 * eps / n_max);
    CHECK(std::fabs(s_small / s_lin - cot_factor) <= 0.002);
    // Default automatic span 0.5*eps/n_max: the cubic pickup reaches a few
    // percent for an ensemble this wide (dn/N = 0.5), and no more.
    const double s_default = analytic_response_slope(ens, params, 0.5 * eps / n_max);
    CHECK(std::fabs(s_default / s_lin - cot_factor) <= 0.06);
  }
  // Documented large-angle value: (eps/2)cot(eps/2) = cot(1) ~ 0.642 at eps=2.
  CHECK(std::fabs(1.0 / std::tan(1.0) - 0.6420926159343306) < 1e-12);

  InteractionParams params;
  params.epsilon = 0.1;
  CHECK_THROWS_AS((void)analytic_response_slope(ens, params, 0.0), ValidationError);
}

TEST_CASE("coupling sweep: fitted slope matches the analytic response") {
  TrialConfig base = sweep_base(1e4, 5e3, 0.1, 5000000, 811);
  const std::vector<double> g_values{-2.4e-7, -1.2e-7, 0.0, 1.2e-7, 2.4e-7};
  const SweepResult sweep = sweep_coupling(base, g_values, 0);

  REQUIRE(sweep.axis_values == g_values);
  REQUIRE(sweep.delta_n_normalized.size() == g_values.size());
  REQUIRE(sweep.fit.kind == FitKind::linear);
  CHECK_FALSE(sweep.recovered_g.has_value());

  const double s_ref = analytic_response_slope(base.ensemble, base.params, 2.4e-7);
  const double slope = sweep.fit.parameters[0];
  const double slope_err = sweep.fit.parameter_errors[0];
  CHECK(std::fabs(slope - s_ref) <= 4.0 * slope_err);
  // The zero-coupling point carries no shift.
  CHECK(std::fabs(sweep.delta_n_normalized[2]) <= 5.0 * sweep.standard_errors[2]);
  // Intercept consistent with zero on a symmetric sweep.
  CHECK(std::fabs(sweep.fit.parameters[1]) <= 4.0 * sweep.fit.parameter_errors[1]);
}

TEST_CASE("delay sweep resolves the modulated peak and stays flat unmodulated") {
  const std::vector<double> tau{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  DelayModel model;
  model.g_peak = 5e-8;
  model.tau_c = 0.8;

  // Modulated probe: spread 0.28*N, peak amplitude ~5.2e-3 resolved at >3
  // sigma with 1e6 trials/point.
  TrialConfig mod = sweep_base(2e5, 0.28 * 2e5, 0.3, 1000000, 905);
  const SweepResult peaked = sweep_coupling_delay(mod, model, tau, 0);
  REQUIRE(peaked.fit.kind == FitKind::gaussian);
  REQUIRE(peaked.axis_values == tau);
  const double amp = peaked.fit.parameters[0];
  const double amp_err = peaked.fit.parameter_errors[0];
  const Moments m = moments(mod.ensemble);
  const double predicted =
      2.0 * (model.g_peak / mod.params.epsilon) * m.std_dn * m.std_dn / m.mean_n;
  CHECK(amp >= 3.0 * amp_err);
  CHECK(std::fabs(amp - predicted) <= 4.0 * amp_err + 0.06 * predicted);
  CHECK(std::fabs(peaked.fit.parameters[1]) <= 4.0 * peaked.fit.parameter_errors[1]);
  CHECK(std::fabs(peaked.fit.parameters[2] - model.tau_c) <=
        4.0 * peaked.fit.parameter_errors[2] + 0.05 * model.tau_c);

  // Shot-noise-only probe: the response shrinks by dn^2/N ~ 6e9/2e5 -> N,
  // leaving nothing resolvable above the per-point error.
  TrialConfig flat = mod;
  flat.ensemble = sine_modulated(2e5, 0.0, true, 128);
  const SweepResult unmodulated = sweep_coupling_delay(flat, model, tau, 0);
  CHECK(std::fabs(unmodulated.fit.parameters[0]) <=
        3.0 * unmodulated.fit.parameter_errors[0]);
}

TEST_CASE("variance sweep recovers the injected coupling") {
  TrialConfig base = sweep_base(3e4, 0.5 * 3e4, 0.3, 2000000, 640);
  base.params.g = 2.67e-7;
  const std::vector<double> dn_values{0.30 * 3e4, 0.45 * 3e4, 0.55 * 3e4, 0.65 * 3e4,
                                      0.707 * 3e4};
  const SweepResult sweep = sweep_variance(base, dn_values, 0);

  REQUIRE(sweep.axis_values == dn_values);
  REQUIRE(sweep.recovered_g.has_value());
  REQUIRE(sweep.recovered_g_error.has_value());
  const double rec = *sweep.recovered_g;
  const double rec_err = *sweep.recovered_g_error;

  // Shift grows significantly with the spread.
  CHECK(sweep.fit.parameters[0] >= 4.0 * sweep.fit.parameter_errors[0]);
  // Closed loop: statistical error from the fit plus ~4% saturation bias
  // (g n_max/eps ~ 0.05 at the widest point).
  CHECK(rec_err <= 0.2 * base.params.g);
  CHECK(std::fabs(rec - base.params.g) <= 3.5 * rec_err + 0.04 * base.params.g);

  // Targets above the full-depth ceiling are rejected.
  TrialConfig cheap = base;
  cheap.total_trials = 10000;
  const std::vector<double> bad{0.30 * 3e4, 0.45 * 3e4, 0.72 * 3e4};
  CHECK_THROWS_AS((void)sweep_variance(cheap, bad, 0), UnreachableVariance);
}

TEST_CASE("variance sweep requires a sine-modulated base ensemble") {
  TrialConfig base;
  base.ensemble = poissonian(1e4, 1e-9);
  base.params.g = 1e-7;
  base.params.epsilon = 0.3;
  base.total_trials = 1000;
  base.seed = 3;
  CHECK_THROWS_AS((void)sweep_variance(base, {100.0, 110.0, 120.0}, 0), ValidationError);
}

TEST_CASE("epsilon sweep follows the inverse-epsilon law and recovers g") {
  TrialConfig base = sweep_base(3e4, 0.5 * 3e4, 0.3, 2000000, 417);
  base.params.g = 1e-7;
  const std::vector<double> eps_values{0.15, 0.2, 0.3, 0.4, 0.6};
  const SweepResult sweep = sweep_epsilon(base, eps_values, 0);

  REQUIRE(sweep.axis_values == eps_values);
  REQUIRE(sweep.recovered_g.has_value());
  const Moments m = moments(base.ensemble);
  const double slope_pred = 2.0 * base.params.g * m.std_dn * m.std_dn / m.mean_n;
  CHECK(std::fabs(sweep.fit.parameters[0] - slope_pred) <=
        4.0 * sweep.fit.parameter_errors[0] + 0.05 * slope_pred);
  CHECK(std::fabs(*sweep.recovered_g - base.params.g) <=
        4.0 * *sweep.recovered_g_error + 0.08 * base.params.g);
}

TEST_CASE("scaling study reproduces Heisenberg-like precision scaling") {
  const std::vector<double> grid{1e3, 3e3, 1e4, 3e4};
  TrialConfig base;
  base.params.g = 6e-8;
  base.params.epsilon = 0.1;
  base.total_trials = 1000000;
  base.seed = 1111;
  ScalingOptions options;
  options.dn_over_n = 0.5;

  const ScalingResult result = scaling_study(grid, VariancePolicy::proportional, base, options, 0);
  REQUIRE(result.points.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ScalingPoint& pt = result.points[i];
    CHECK(pt.mean_n == grid[i]);
    CHECK(result.included_in_fit[i]);
    CHECK(pt.nu >= options.min_nu_for_fit);
    CHECK(pt.delta_g > 0.0);
    // delta_g recomposes from its own fields.
    const double recomposed =
        2.0 * pt.sigma / (pt.slope_s * std::sqrt(static_cast<double>(pt.nu)));
    CHECK(std::fabs(pt.delta_g - recomposed) <= 1e-12 * pt.delta_g);
    // Automatic span keeps the response within a few percent of linear
    // (cubic stencil residue at dn/N = 0.5), far from fixed-span saturation.
    CHECK(std::fabs(pt.slope_s / result.slope_linear[i] - 1.0) < 0.06);
  }
  const double exponent = result.fit.parameters[0];
  CHECK(exponent >= -1.08);
  CHECK(exponent <= -0.92);
}

TEST_CASE("scaling study reproduces shot-noise-limited scaling") {
  const std::vector<double> grid{1e3, 3e3, 1e4, 3e4};
  TrialConfig base;
  base.params.g = 6e-8;
  base.params.epsilon = 0.1;
  base.total_trials = 1000000;
  base.seed = 2222;
  ScalingOptions options;

  const ScalingResult result = scaling_study(grid, VariancePolicy::poissonian, base, options, 0);
  const double exponent = result.fit.parameters[0];
  CHECK(exponent >= -0.58);
  CHECK(exponent <= -0.42);
  // Poissonian slope is spread^2-limited: s ~ 2N/(eps N) stays flat, so the
  // precision gain comes entirely from sigma ~ 1/sqrt(N).
  const double s_ratio = result.points.back().slope_s / result.points.front().slope_s;
  CHECK(std::fabs(s_ratio - 1.0) < 0.05);
}

TEST_CASE("scaling study validates its grid and options") {
  TrialConfig base;
  base.params.g = 6e-8;
  base.params.epsilon = 0.1;
  base.total_trials = 1000;
  base.seed = 1;
  ScalingOptions options;

  CHECK_THROWS_AS((void)scaling_study({1e3, 2e3, 3e3}, VariancePolicy::poissonian, base,
                                      options, 0),
                  ValidationError);  // too few points
  CHECK_THROWS_AS((void)scaling_study({1e3, 3e3, 2e3, 9e3}, VariancePolicy::poissonian, base,
                                      options, 0),
                  ValidationError);  // not ascending
  CHECK_THROWS_AS((void)scaling_study({1e3, 1.5e3, 2e3, 2.5e3}, VariancePolicy::poissonian,
                                      base, options, 0),
                  ValidationError);  // less than a factor of 3
  ScalingOptions bad_ratio = options;
  bad_ratio.dn_over_n = 0.8;  // above 1/sqrt(2): depth would exceed 1
  CHECK_THROWS_AS((void)scaling_study({1e3, 3e3, 1e4, 3e4}, VariancePolicy::proportional,
                                      base, bad_ratio, 0),
                  ValidationError);
  ScalingOptions bad_span = options;
  bad_span.span_mode = SpanMode::fixed;
  bad_span.span_abs = 0.0;
  CHECK_THROWS_AS((void)scaling_study({1e3, 3e3, 1e4, 3e4}, VariancePolicy::poissonian, base,
                                      bad_span, 0),
                  ValidationError);
}

TEST_CASE("a study whose points all fail the occupancy cut cannot be fitted") {
  TrialConfig base;
  base.params.g = 6e-8;
  base.params.epsilon = 0.1;
  base.total_trials = 2000;
  base.seed = 77;
  ScalingOptions options;
  options.min_nu_for_fit = 1000000000;  // nothing qualifies
  CHECK_THROWS_AS((void)scaling_study({1e2, 3e2, 1e3, 3e3}, VariancePolicy::poissonian, base,
                                      options, 0),
                  SingularFit);
}

TEST_CASE("sweep preconditions") {
  TrialConfig base = sweep_base(1e3, 500.0, 0.1, 1000, 5);
  CHECK_THROWS_AS((void)sweep_coupling(base, {1e-8, 2e-8}, 0), ValidationError);
  CHECK_THROWS_AS((void)sweep_variance(base, {400.0, 500.0}, 0), ValidationError);
  CHECK_THROWS_AS((void)sweep_epsilon(base, {0.1, 0.2}, 0), ValidationError);
  CHECK_THROWS_AS((void)sweep_epsilon(base, {0.1, 0.2, 0.0}, 0), ValidationError);
  CHECK_THROWS_AS((void)sweep_epsilon(base, {0.1, 0.2, 4.0}, 0), ValidationError);

  DelayModel model;
  model.g_peak = 1e-8;
  model.tau_c = 1.0;
  CHECK_THROWS_AS((void)sweep_coupling_delay(base, model, {-1.0, 0.0, 1.0}, 0),
                  ValidationError);  // too few delays
  model.tau_c = 0.0;
  CHECK_THROWS_AS((void)sweep_coupling_delay(base, model, {-2.0, -1.0, 0.0, 1.0, 2.0}, 0),
                  ValidationError);
}
