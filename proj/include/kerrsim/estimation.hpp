#pragma once

#include <cstdint>

#include "kerrsim/probe.hpp"
#include "kerrsim/quantum.hpp"

namespace kerrsim {

struct ShiftResult {
  double mean_n_postselected = 0.0;  // photons
  double delta_n = 0.0;              // photons, vs ensemble mean
  double delta_n_normalized = 0.0;   // delta_n / ensemble mean
  double postselect_rate = 0.0;      // in [0,1]
};

struct InformationBounds {
  double fisher_classical_per_trial = 0.0;  // rad^-2
  double qfi_per_use = 0.0;                 // rad^-2
  double cramer_rao_dg = 0.0;               // rad
};

// Pointer-shift law for an imaginary weak value: 2 * g * delta_p^2 * im_cw.
double generic_pointer_shift(double g, double delta_p, double im_cw);

// Post-selected mean by exact per-intensity probability:
//   mean = E[n p(n)] / E[p(n)],  p(n) = sin^2((g n + eps)/2),
// with compensated pmf summation or quadrature. Independent of g_s.
// Throws DegeneratePostselection when the rate underflows (<= 1e-300).
ShiftResult postselected_mean_exact(const ProbeEnsemble& ensemble, const InteractionParams& params);

// First-order shift 2*(g/eps)*std_dn^2. Throws OrthogonalPostselection at
// eps = 0.
double mean_shift_linearized(const Moments& moments, const InteractionParams& params);

// Im C_w convention used when inverting the shift into a coupling estimate:
// the small-eps approximation 1/eps (default, matching the calibration
// formulas throughout) or the exact cot(eps/2)/2.
enum class WeakValueConvention { inverse_epsilon, exact_cotangent };

// g estimate from an observed mean shift: delta_n / (2*std_dn^2*Im C_w).
// Throws ZeroVariance when std_dn = 0 and OrthogonalPostselection at eps = 0.
double estimate_g(double delta_n_observed, const Moments& moments, double epsilon,
                  WeakValueConvention convention = WeakValueConvention::inverse_epsilon);

// Per-trial classical Fisher information about g carried by the
// post-selected readings, with the success-rate information removed (the
// accounting that keeps discarded trials from contributing):
//   F = E[p'(n)^2 / p(n)] - E[p'(n)]^2 / E[p(n)],
// evaluated via the exact identity p'^2/p = n^2 cos^2((g n + eps)/2).
// Zero for a single-point (zero-variance) ensemble; at g = 0 equals
// cos^2(eps/2) * std_dn^2.
double fisher_classical(const ProbeEnsemble& ensemble, const InteractionParams& params);

// Quantum Fisher information (variance-of-generator convention, no factor
// 4) of the joint state after the interaction, for a Poissonian probe with
// the given mean and the system prepared in `pre`:
//   Var(n C) = <n^2><C> - <n>^2<C>^2,  <C> = |amp1|^2.
double qfi_pure(double mean_n, const SystemState& pre);

// Convexity upper bound for a mixed probe: ensemble average of each
// member's pure-state QFI. A reconstruction of the mixed-state red-line
// bound; the exact bound's derivation is not reproduced here.
double qfi_mixed_upper_bound(const ProbeEnsemble& ensemble, const SystemState& pre);

// 1/sqrt(fisher * uses). Throws NonpositiveInformation when fisher <= 0.
double cramer_rao_bound(double fisher, long long uses);

}  // namespace kerrsim
