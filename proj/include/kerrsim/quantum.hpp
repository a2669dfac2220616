#pragma once

#include "kerrsim/dd.hpp"

namespace kerrsim {

struct Complex {
  double re = 0.0;
  double im = 0.0;
};

// Single photon split over two paths: amp0 multiplies |0> (non-interacting
// path), amp1 multiplies |1> (interacting path; the which-path projector C
// is |1><1|). The *_tail members carry extended-precision residuals so that
// overlap arithmetic near orthogonality keeps ~30 significant digits; they
// are maintained by the constructors below and may be left zero elsewhere.
struct SystemState {
  Complex amp0;
  Complex amp1;
  Complex amp0_tail;
  Complex amp1_tail;
};

// Couplings in radians: g per photon (cross-phase, the estimand), g_s per
// photon squared (self-phase, a nuisance the protocol cancels), epsilon the
// post-selection offset angle.
struct InteractionParams {
  double g = 0.0;
  double g_s = 0.0;
  double epsilon = 0.0;
};

// (|0> + |1>)/sqrt(2).
SystemState make_preselection();

// (|1> - e^{-i*epsilon}|0>)/sqrt(2): amp1 = 1/sqrt(2), amp0 = -e^{-i*eps}/sqrt(2).
// The real part of amp0 is assembled as -(1 - 2 sin^2(eps/2))/sqrt(2) in
// extended precision so the near-cancellation against the preselection
// survives into inner products at eps as small as 1e-6.
SystemState make_postselection(double epsilon);

// <a|b> = conj(a0) b0 + conj(a1) b1, rounded to double.
Complex inner_product(const SystemState& a, const SystemState& b);

// <post|C|pre> / <post|pre> with C = |1><1|.
// Throws OrthogonalPostselection when |<post|pre>| <= 1e-15.
Complex weak_value(const SystemState& pre, const SystemState& post);

// Diagonal phase evolution for an n-photon probe pulse: amp1 picks up
// e^{-i(g_s n^2 + g n)}, amp0 picks up e^{-i g_s n^2}. Phase products are
// formed in extended precision and reduced mod 2*pi before evaluating
// trigonometry, keeping g_s n^2 stable at n ~ 1e7. Extended tails are not
// propagated (double-precision operation). Requires n >= 0.
SystemState evolve(const SystemState& state, long long n, const InteractionParams& params);

// |<phi|U(n)|psi>|^2 = sin^2((g n + epsilon)/2); in [0,1], independent of
// g_s to the last bit. Requires n >= 0.
double postselect_prob_exact(long long n, const InteractionParams& params);

// Real-intensity variant used by ensemble-level quadrature, where n stands
// for a pulse intensity rather than an integer count.
double postselect_prob_exact_intensity(double n, const InteractionParams& params);

// sin^2(eps/2) * (1 + 2 g n Im C_w), the first-order expansion in g n.
// Im C_w is the exact cot(eps/2)/2. Caller owns the validity regime
// n*g/eps << 1; the value is not clamped to [0,1].
// Throws OrthogonalPostselection when epsilon = 0.
double postselect_prob_linearized(long long n, const InteractionParams& params);

}  // namespace kerrsim
