#include "kerrsim/experiments.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "kerrsim/errors.hpp"
#include "kerrsim/rng.hpp"

namespace kerrsim {
namespace {

// Largest dn/N a full-depth sine modulation can deliver (1/sqrt(2), rounded
// up one ulp so the exact edge stays representable).
constexpr double kMaxDnOverN = 0.7071067811865476;

void require_finite_axis(const std::vector<double>& values, std::size_t min_count,
                         const char* what) {
  if (values.size() < min_count) {
    throw ValidationError(std::string(what) + ": need at least " + std::to_string(min_count) +
                          " values");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": values must be finite");
  }
}

// Runs one batch per axis point with a per-point seed derived from the base
// seed and the point index, so inserting or reordering points elsewhere in
// a campaign never changes this sweep's draws.
SweepResult run_points(TrialConfig& run, const TrialConfig& base,
                       const std::vector<double>& axis,
                       const std::function<void(TrialConfig&, double)>& apply, int workers) {
  SweepResult result;
  result.axis_values = axis;
  result.delta_n_normalized.reserve(axis.size());
  result.standard_errors.reserve(axis.size());
  result.postselected_counts.reserve(axis.size());
  for (std::size_t i = 0; i < axis.size(); ++i) {
    apply(run, axis[i]);
    run.seed = derive_seed(base.seed, static_cast<uint64_t>(i));
    const TrialBatch batch = run_batch(run, workers);
    result.delta_n_normalized.push_back(batch.delta_n_normalized);
    result.standard_errors.push_back(batch.standard_error);
    result.postselected_counts.push_back(batch.postselected_count);
  }
  return result;
}

// Sine-mixture construction parameters recoverable from a built ensemble:
// the members list keeps one entry per modulation node.
struct SineShape {
  bool shot_noise = false;
  int nodes = 0;
};

SineShape sine_shape_of(const ProbeEnsemble& ensemble) {
  if (ensemble.members.size() < 2) {
    throw ValidationError("this sweep needs a sine-modulated base ensemble");
  }
  return SineShape{ensemble.members[0].poissonian, static_cast<int>(ensemble.members.size())};
}

}  // namespace

SweepResult sweep_coupling(const TrialConfig& base, const std::vector<double>& g_values,
                           int workers) {
  require_finite_axis(g_values, 3, "g_values");
  TrialConfig run = base;
  SweepResult result = run_points(
      run, base, g_values, [](TrialConfig& c, double g) { c.params.g = g; }, workers);
  result.fit = fit_linear(g_values, result.delta_n_normalized, result.standard_errors);
  return result;
}

SweepResult sweep_coupling_delay(const TrialConfig& base, const DelayModel& model,
                                 const std::vector<double>& tau_values, int workers) {
  require_finite_axis(tau_values, 5, "tau_values");
  if (!std::isfinite(model.g_peak)) throw ValidationError("delay.g_peak must be finite");
  if (!(std::isfinite(model.tau_c) && model.tau_c > 0.0)) {
    throw ValidationError("delay.tau_c must be > 0");
  }
  TrialConfig run = base;
  SweepResult result = run_points(
      run, base, tau_values,
      [&model](TrialConfig& c, double tau) {
        c.params.g = model.g_peak * std::exp(-tau * tau / (2.0 * model.tau_c * model.tau_c));
      },
      workers);
  result.fit = fit_gaussian(tau_values, result.delta_n_normalized, result.standard_errors);
  return result;
}

SweepResult sweep_variance(const TrialConfig& base, const std::vector<double>& dn_values,
                           int workers) {
  require_finite_axis(dn_values, 3, "dn_values");
  const SineShape shape = sine_shape_of(base.ensemble);
  const double mean_n = moments(base.ensemble).mean_n;

  std::vector<double> dn2(dn_values.size());
  std::size_t index = 0;
  TrialConfig run = base;
  SweepResult result = run_points(
      run, base, dn_values,
      [&](TrialConfig& c, double dn) {
        const double depth = depth_for_std(mean_n, dn, shape.shot_noise);
        c.ensemble = sine_modulated(mean_n, depth, shape.shot_noise, shape.nodes);
        const double realized = moments(c.ensemble).std_dn;
        dn2[index++] = realized * realized;
      },
      workers);
  result.fit = fit_linear(dn2, result.delta_n_normalized, result.standard_errors);
  result.recovered_g = result.fit.parameters[0] * base.params.epsilon * mean_n / 2.0;
  result.recovered_g_error = result.fit.parameter_errors[0] * base.params.epsilon * mean_n / 2.0;
  return result;
}

SweepResult sweep_epsilon(const TrialConfig& base, const std::vector<double>& eps_values,
                          int workers) {
  require_finite_axis(eps_values, 3, "eps_values");
  constexpr double kPi = 3.14159265358979323846;
  std::vector<double> inv_eps(eps_values.size());
  for (std::size_t i = 0; i < eps_values.size(); ++i) {
    if (!(eps_values[i] > 0.0 && eps_values[i] < kPi)) {
      throw ValidationError("eps_values must lie in (0, pi)");
    }
    inv_eps[i] = 1.0 / eps_values[i];
  }
  const Moments m = moments(base.ensemble);
  TrialConfig run = base;
  SweepResult result = run_points(
      run, base, eps_values, [](TrialConfig& c, double eps) { c.params.epsilon = eps; }, workers);
  result.fit = fit_linear(inv_eps, result.delta_n_normalized, result.standard_errors);
  result.recovered_g = result.fit.parameters[0] * m.mean_n / (2.0 * m.std_dn * m.std_dn);
  result.recovered_g_error =
      result.fit.parameter_errors[0] * m.mean_n / (2.0 * m.std_dn * m.std_dn);
  return result;
}

double analytic_response_slope(const ProbeEnsemble& ensemble, const InteractionParams& params,
                               double span) {
  if (!(std::isfinite(span) && span > 0.0)) throw ValidationError("span must be > 0");
  // Least-squares slope through five exact-response points at offsets
  // k*span/2, k = -2..2: s = sum(k*y_k) / (10 * span/2).
  double weighted = 0.0;
  for (int k = -2; k <= 2; ++k) {
    if (k == 0) continue;
    InteractionParams p = params;
    p.g = params.g + 0.5 * static_cast<double>(k) * span;
    weighted += static_cast<double>(k) * postselected_mean_exact(ensemble, p).delta_n_normalized;
  }
  return weighted / (5.0 * span);
}

ScalingResult scaling_study(const std::vector<double>& grid, VariancePolicy policy,
                            const TrialConfig& base, const ScalingOptions& options, int workers) {
  if (grid.size() < 4) throw ValidationError("grid: need at least 4 mean-intensity points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(std::isfinite(grid[i]) && grid[i] > 0.0)) {
      throw ValidationError("grid: mean intensities must be > 0");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ValidationError("grid: mean intensities must be strictly ascending");
    }
  }
  if (!(grid.back() >= 3.0 * grid.front())) {
    throw ValidationError("grid: must span at least a factor of 3 in mean intensity");
  }
  if (!(options.dn_over_n > 0.0 && options.dn_over_n <= kMaxDnOverN)) {
    throw ValidationError("dn_over_n must be within (0, 1/sqrt(2)]");
  }
  if (options.span_mode == SpanMode::fixed && !(options.span_abs > 0.0)) {
    throw ValidationError("span_abs must be > 0 in fixed span mode");
  }
  if (options.ensemble_nodes < 64) throw ValidationError("ensemble_nodes must be >= 64");
  if (options.min_nu_for_fit < 2) throw ValidationError("min_nu_for_fit must be >= 2");

  ScalingResult result;
  result.points.reserve(grid.size());
  result.slope_linear.reserve(grid.size());
  result.included_in_fit.reserve(grid.size());

  TrialConfig run = base;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double mean_n = grid[i];
    if (policy == VariancePolicy::proportional) {
      const double depth = depth_for_std(mean_n, options.dn_over_n * mean_n, true);
      run.ensemble = sine_modulated(mean_n, depth, true, options.ensemble_nodes);
    } else {
      run.ensemble = poissonian(mean_n, options.tail_mass_bound);
    }
    const double span = options.span_mode == SpanMode::automatic
                            ? 0.5 * base.params.epsilon / max_intensity(run.ensemble)
                            : options.span_abs;
    const double slope = analytic_response_slope(run.ensemble, base.params, span);

    run.seed = derive_seed(base.seed, static_cast<uint64_t>(i));
    const TrialBatch batch = run_batch(run, workers);

    ScalingPoint point;
    point.mean_n = mean_n;
    point.slope_s = slope;
    point.sigma = batch.sigma;
    point.nu = batch.postselected_count;
    point.delta_g = slope > 0.0
                        ? 2.0 * batch.sigma /
                              (slope * std::sqrt(static_cast<double>(batch.postselected_count)))
                        : 0.0;
    result.points.push_back(point);

    const Moments m = moments(run.ensemble);
    result.slope_linear.push_back(2.0 * m.std_dn * m.std_dn / (base.params.epsilon * mean_n));
    result.included_in_fit.push_back(point.nu >= options.min_nu_for_fit && point.slope_s > 0.0 &&
                                     std::isfinite(point.delta_g) && point.delta_g > 0.0);
  }

  std::vector<double> xs, ys, es;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    if (!result.included_in_fit[i]) continue;
    const ScalingPoint& p = result.points[i];
    xs.push_back(p.mean_n);
    ys.push_back(p.delta_g);
    // delta_g inherits sigma's sampling error; s is analytic and exact.
    es.push_back(p.delta_g / std::sqrt(2.0 * static_cast<double>(p.nu - 1)));
  }
  if (xs.size() < 3) {
    throw SingularFit("fewer than 3 scaling points eligible for the power-law fit");
  }
  result.fit = fit_powerlaw(xs, ys, es);
  return result;
}

}  // namespace kerrsim
