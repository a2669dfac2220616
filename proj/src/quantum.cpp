#include "kerrsim/quantum.hpp"

#include <cmath>
#include <string>

#include "kerrsim/errors.hpp"

namespace kerrsim {
namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;
constexpr long double kTwoPiL = 6.28318530717958647692528676655900577L;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw ValidationError(std::string(what) + " must be finite");
}

DDComplex amp_dd(const Complex& hi, const Complex& tail) {
  return DDComplex{DD{hi.re, tail.re}, DD{hi.im, tail.im}};
}

// <a|b> in extended precision: conj(a0) b0 + conj(a1) b1.
DDComplex inner_product_dd(const SystemState& a, const SystemState& b) {
  DDComplex a0 = ddc_conj(amp_dd(a.amp0, a.amp0_tail));
  DDComplex a1 = ddc_conj(amp_dd(a.amp1, a.amp1_tail));
  DDComplex b0 = amp_dd(b.amp0, b.amp0_tail);
  DDComplex b1 = amp_dd(b.amp1, b.amp1_tail);
  return ddc_add(ddc_mul(a0, b0), ddc_mul(a1, b1));
}

Complex rotate(const Complex& a, double cos_phi, double sin_phi) {
  // multiply by e^{-i phi}
  return Complex{a.re * cos_phi + a.im * sin_phi, a.im * cos_phi - a.re * sin_phi};
}

}  // namespace

SystemState make_preselection() {
  SystemState s;
  const double a = std::sqrt(0.5);
  s.amp0 = Complex{a, 0.0};
  s.amp1 = Complex{a, 0.0};
  return s;
}

SystemState make_postselection(double epsilon) {
  require_finite(epsilon, "epsilon");
  const double a = std::sqrt(0.5);
  // cos(eps) = 1 - 2 sin^2(eps/2), assembled in extended precision: the
  // low word keeps the bits that a rounded cos(eps) loses, which carry the
  // whole overlap with the preselection when eps is small.
  const double sh = std::sin(0.5 * epsilon);
  DD two_sh2 = dd_mul(DD{2.0 * sh, 0.0}, DD{sh, 0.0});
  DD cos_eps = dd_sub(DD{1.0, 0.0}, two_sh2);
  DD re0 = dd_neg(dd_mul(cos_eps, DD{a, 0.0}));
  const double im0 = std::sin(epsilon) * a;

  SystemState s;
  s.amp0 = Complex{re0.hi, im0};
  s.amp0_tail = Complex{re0.lo, 0.0};
  s.amp1 = Complex{a, 0.0};
  return s;
}

Complex inner_product(const SystemState& a, const SystemState& b) {
  DDComplex v = inner_product_dd(a, b);
  return Complex{v.re.hi + v.re.lo, v.im.hi + v.im.lo};
}

Complex weak_value(const SystemState& pre, const SystemState& post) {
  DDComplex den = inner_product_dd(post, pre);
  const double abs2 = (den.re.hi + den.re.lo) * (den.re.hi + den.re.lo) +
                      (den.im.hi + den.im.lo) * (den.im.hi + den.im.lo);
  if (!(abs2 > 1e-30)) {
    throw OrthogonalPostselection("pre/post overlap magnitude <= 1e-15");
  }
  // <post|C|pre> with C = |1><1| keeps only the interacting-path product.
  DDComplex num = ddc_mul(ddc_conj(amp_dd(post.amp1, post.amp1_tail)),
                          amp_dd(pre.amp1, pre.amp1_tail));
  DDComplex w = ddc_div(num, den);
  Complex out{w.re.hi + w.re.lo, w.im.hi + w.im.lo};
  if (!std::isfinite(out.re) || !std::isfinite(out.im)) {
    throw OrthogonalPostselection("weak value overflow at near-orthogonal post-selection");
  }
  return out;
}

SystemState evolve(const SystemState& state, long long n, const InteractionParams& params) {
  if (n < 0) throw ValidationError("photon count n must be >= 0");
  require_finite(params.g, "g");
  require_finite(params.g_s, "g_s");
  // Phase products in extended precision, reduced mod 2*pi before the
  // trigonometry: g_s*n^2 reaches ~1e15 rad at n ~ 1e7 where a raw double
  // product would already carry O(0.1) rad of rounding.
  const long double nl = static_cast<long double>(n);
  const long double spm = fmodl(static_cast<long double>(params.g_s) * nl * nl, kTwoPiL);
  const long double xpm = fmodl(static_cast<long double>(params.g) * nl, kTwoPiL);
  const double phi0 = static_cast<double>(spm);
  const double phi1 = static_cast<double>(fmodl(spm + xpm, kTwoPiL));

  SystemState out;
  out.amp0 = rotate(state.amp0, std::cos(phi0), std::sin(phi0));
  out.amp1 = rotate(state.amp1, std::cos(phi1), std::sin(phi1));
  return out;
}

double postselect_prob_exact_intensity(double n, const InteractionParams& params) {
  require_finite(n, "n");
  require_finite(params.epsilon, "epsilon");
  require_finite(params.g, "g");
  long double half = (static_cast<long double>(params.g) * static_cast<long double>(n) +
                      static_cast<long double>(params.epsilon)) * 0.5L;
  // sin^2 has period pi, so the reduced argument gives the same square.
  if (half >= kPiL || half <= -kPiL) half = fmodl(half, kPiL);
  const double s = std::sin(static_cast<double>(half));
  return s * s;
}

double postselect_prob_exact(long long n, const InteractionParams& params) {
  if (n < 0) throw ValidationError("photon count n must be >= 0");
  return postselect_prob_exact_intensity(static_cast<double>(n), params);
}

double postselect_prob_linearized(long long n, const InteractionParams& params) {
  if (n < 0) throw ValidationError("photon count n must be >= 0");
  require_finite(params.epsilon, "epsilon");
  require_finite(params.g, "g");
  if (params.epsilon == 0.0) {
    throw OrthogonalPostselection("linearized post-selection probability diverges at epsilon = 0");
  }
  const double sh = std::sin(0.5 * params.epsilon);
  const double ch = std::cos(0.5 * params.epsilon);
  const double im_cw = ch / (2.0 * sh);
  return sh * sh * (1.0 + 2.0 * params.g * static_cast<double>(n) * im_cw);
}

}  // namespace kerrsim
