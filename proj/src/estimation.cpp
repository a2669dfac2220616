#include "kerrsim/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "kerrsim/errors.hpp"
#include "kerrsim/summation.hpp"

namespace kerrsim {
namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;

// Half-angle (g n + eps)/2 reduced mod pi in extended precision. sin^2,
// cos^2, and sin*cos are all pi-periodic, so the reduction is exact for
// every quantity formed below.
double half_angle(double n, const InteractionParams& params) {
  long double half = 0.5L * (static_cast<long double>(params.g) * static_cast<long double>(n) +
                             static_cast<long double>(params.epsilon));
  if (half >= kPiL || half <= -kPiL) half = std::fmod(half, kPiL);
  return static_cast<double>(half);
}

// <C> = |amp1|^2 assembled with the extended-precision tails, so prepared
// states hit exact projector weights (1/sqrt(2) squares to 0.5 exactly).
double projector_weight(const SystemState& pre) {
  const DD re{pre.amp1.re, pre.amp1_tail.re};
  const DD im{pre.amp1.im, pre.amp1_tail.im};
  return dd_add(dd_mul(re, re), dd_mul(im, im)).hi;
}

double member_qfi(double c, double mean_n, bool poissonian) {
  const double second_moment = mean_n * mean_n + (poissonian ? mean_n : 0.0);
  return c * second_moment - c * c * mean_n * mean_n;
}

}  // namespace

double generic_pointer_shift(double g, double delta_p, double im_cw) {
  if (!(delta_p >= 0.0)) throw ValidationError("delta_p must be >= 0");
  return 2.0 * g * delta_p * delta_p * im_cw;
}

ShiftResult postselected_mean_exact(const ProbeEnsemble& ensemble, const InteractionParams& params) {
  const Moments m = moments(ensemble);
  ShiftResult out;

  if (params.g == 0.0) {
    // p(n) is the same for every n, so conditioning changes nothing.
    const double s = std::sin(0.5 * params.epsilon);
    const double rate = s * s;
    if (!(rate > 1e-300)) {
      throw DegeneratePostselection("post-selection rate underflows at this epsilon");
    }
    out.mean_n_postselected = m.mean_n;
    out.postselect_rate = rate;
    return out;
  }

  if (ensemble.is_discrete() && ensemble.pmf().n.size() == 1) {
    // Single support point: the conditional mean is that point, exactly.
    const double n0 = ensemble.pmf().n[0];
    const double p = postselect_prob_exact_intensity(n0, params);
    if (!(p > 1e-300)) {
      throw DegeneratePostselection("post-selection never succeeds on the single support point");
    }
    out.mean_n_postselected = n0;
    out.postselect_rate = p;
    return out;
  }

  CompensatedSum num, den;
  ensemble_scan(ensemble, [&](double n, double w) {
    const double p = postselect_prob_exact_intensity(n, params);
    num.add(w * n * p);
    den.add(w * p);
  });
  const double rate = den.value();
  if (!(rate > 1e-300)) {
    throw DegeneratePostselection("post-selection succeeds with probability <= 1e-300");
  }
  out.postselect_rate = std::clamp(rate, 0.0, 1.0);
  out.mean_n_postselected = num.value() / rate;
  out.delta_n = out.mean_n_postselected - m.mean_n;
  out.delta_n_normalized = out.delta_n / m.mean_n;
  return out;
}

double mean_shift_linearized(const Moments& moments, const InteractionParams& params) {
  if (params.epsilon == 0.0) {
    throw OrthogonalPostselection("epsilon = 0 makes the weak-value shift diverge");
  }
  return 2.0 * (params.g / params.epsilon) * moments.std_dn * moments.std_dn;
}

double estimate_g(double delta_n_observed, const Moments& moments, double epsilon,
                  WeakValueConvention convention) {
  if (epsilon == 0.0) {
    throw OrthogonalPostselection("epsilon = 0 makes the weak-value inversion diverge");
  }
  const double variance = moments.std_dn * moments.std_dn;
  if (!(variance > 0.0)) {
    throw ZeroVariance("ensemble intensity variance is zero; the pointer does not respond to g");
  }
  const double im_cw = (convention == WeakValueConvention::inverse_epsilon)
                           ? 1.0 / epsilon
                           : 0.5 / std::tan(0.5 * epsilon);
  return delta_n_observed / (2.0 * variance * im_cw);
}

double fisher_classical(const ProbeEnsemble& ensemble, const InteractionParams& params) {
  if (ensemble.is_discrete() && ensemble.pmf().n.size() == 1) return 0.0;

  // F = E[p'^2/p] - E[p']^2 / E[p] with p = sin^2(h), p' = n sin(h)cos(h),
  // h = (g n + eps)/2, using the exact cancellation p'^2/p = n^2 cos^2(h).
  CompensatedSum quad, drift, rate;
  ensemble_scan(ensemble, [&](double n, double w) {
    const double h = half_angle(n, params);
    const double s = std::sin(h);
    const double c = std::cos(h);
    quad.add(w * n * n * c * c);
    drift.add(w * n * s * c);
    rate.add(w * s * s);
  });
  const double b = rate.value();
  if (!(b > 1e-300)) return 0.0;  // no successes: the readings carry nothing
  const double a = drift.value();
  return std::max(0.0, quad.value() - a * a / b);
}

double qfi_pure(double mean_n, const SystemState& pre) {
  if (!(mean_n > 0.0)) throw ValidationError("mean_n must be > 0");
  return member_qfi(projector_weight(pre), mean_n, true);
}

double qfi_mixed_upper_bound(const ProbeEnsemble& ensemble, const SystemState& pre) {
  const double c = projector_weight(pre);
  CompensatedSum sum;
  if (!ensemble.members.empty()) {
    for (const MixtureMember& member : ensemble.members) {
      sum.add(member.weight * member_qfi(c, member.mean_n, member.poissonian));
    }
  } else {
    // User-supplied pmf: each support point is its own zero-variance member.
    const DiscretePmf& pmf = ensemble.pmf();
    for (std::size_t i = 0; i < pmf.n.size(); ++i) {
      sum.add(pmf.w[i] * member_qfi(c, pmf.n[i], false));
    }
  }
  return std::max(0.0, sum.value());
}

double cramer_rao_bound(double fisher, long long uses) {
  if (uses < 1) throw ValidationError("uses must be >= 1");
  if (!(fisher > 0.0)) throw NonpositiveInformation("fisher information must be > 0");
  return 1.0 / std::sqrt(fisher * static_cast<double>(uses));
}

}  // namespace kerrsim
