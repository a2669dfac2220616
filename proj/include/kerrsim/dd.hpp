#pragma once

#include <cmath>

namespace kerrsim {

// Double-double value: an unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
// Used where a plain double would lose the small component of a cancelling
// sum (e.g. 1 - cos(eps) at eps ~ 1e-6). Only the handful of operations the
// library needs are provided.
struct DD {
  double hi = 0.0;
  double lo = 0.0;

  constexpr DD() = default;
  constexpr DD(double h) : hi(h), lo(0.0) {}
  constexpr DD(double h, double l) : hi(h), lo(l) {}

  double value() const { return hi + lo; }
};

namespace detail {

inline DD quick_two_sum(double a, double b) {
  double s = a + b;
  return DD(s, b - (s - a));
}

inline DD two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  return DD(s, (a - (s - bb)) + (b - bb));
}

inline DD two_prod(double a, double b) {
  double p = a * b;
  return DD(p, std::fma(a, b, -p));
}

}  // namespace detail

inline DD dd_add(const DD& a, const DD& b) {
  DD s = detail::two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return detail::quick_two_sum(s.hi, s.lo);
}

inline DD dd_neg(const DD& a) { return DD(-a.hi, -a.lo); }

inline DD dd_sub(const DD& a, const DD& b) { return dd_add(a, dd_neg(b)); }

inline DD dd_mul(const DD& a, const DD& b) {
  DD p = detail::two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return detail::quick_two_sum(p.hi, p.lo);
}

inline DD dd_div(const DD& a, const DD& b) {
  double q1 = a.hi / b.hi;
  DD r = dd_sub(a, dd_mul(DD(q1), b));
  double q2 = r.hi / b.hi;
  r = dd_sub(r, dd_mul(DD(q2), b));
  double q3 = r.hi / b.hi;
  DD q = detail::quick_two_sum(q1, q2);
  return dd_add(q, DD(q3));
}

// Complex number with double-double components.
struct DDComplex {
  DD re;
  DD im;
};

inline DDComplex ddc_add(const DDComplex& a, const DDComplex& b) {
  return {dd_add(a.re, b.re), dd_add(a.im, b.im)};
}

inline DDComplex ddc_mul(const DDComplex& a, const DDComplex& b) {
  return {dd_sub(dd_mul(a.re, b.re), dd_mul(a.im, b.im)),
          dd_add(dd_mul(a.re, b.im), dd_mul(a.im, b.re))};
}

inline DDComplex ddc_conj(const DDComplex& a) { return {a.re, dd_neg(a.im)}; }

inline DDComplex ddc_div(const DDComplex& a, const DDComplex& b) {
  DD denom = dd_add(dd_mul(b.re, b.re), dd_mul(b.im, b.im));
  DDComplex num = ddc_mul(a, ddc_conj(b));
  return {dd_div(num.re, denom), dd_div(num.im, denom)};
}

}  // namespace kerrsim
