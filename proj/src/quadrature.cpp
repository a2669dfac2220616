#include "kerrsim/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace kerrsim {
namespace {

// Legendre P_n(x) and its derivative via the Bonnet recurrence.
void legendre_eval(int n, double x, double* p, double* dp) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  *p = p1;
  *dp = n * (x * p1 - p0) / (x * x - 1.0);
}

QuadratureRule build_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess, then Newton.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p = 0.0, dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      legendre_eval(n, x, &p, &dp);
      double dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    legendre_eval(n, x, &p, &dp);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    double p = 0.0, dp = 0.0;
    legendre_eval(n, 0.0, &p, &dp);
    rule.nodes[n / 2] = 0.0;
    rule.weights[n / 2] = 2.0 / (dp * dp);
  }
  return rule;
}

// Probabilists' Hermite He_n(x) and derivative.
void hermite_eval(int n, double x, double* h, double* dh) {
  double h0 = 1.0, h1 = x;
  for (int k = 2; k <= n; ++k) {
    double hk = x * h1 - (k - 1.0) * h0;
    h0 = h1;
    h1 = hk;
  }
  *h = h1;
  *dh = n * h0;
}

QuadratureRule build_gauss_hermite(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // ln(n!) for the weight normalization.
  double log_nfact = std::lgamma(n + 1.0);
  const double sqrt2 = std::sqrt(2.0);
  const int m = (n + 1) / 2;
  std::vector<double> roots(m);  // descending order of magnitude
  double x = 0.0;
  for (int i = 0; i < m; ++i) {
    // Standard guess ladder for Hermite roots (largest first), scaled by
    // sqrt(2) for the probabilists' normalization.
    if (i == 0) {
      x = sqrt2 * (std::sqrt(2.0 * n + 1.0) -
                   1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0));
    } else if (i == 1) {
      x -= 2.0 * 1.14 * std::pow(n, 0.426) / x;
    } else if (i == 2) {
      x = 1.86 * x - 0.86 * roots[0];
    } else if (i == 3) {
      x = 1.91 * x - 0.91 * roots[1];
    } else {
      x = 2.0 * x - roots[i - 2];
    }
    double h = 0.0, dh = 0.0;
    for (int it = 0; it < 200; ++it) {
      hermite_eval(n, x, &h, &dh);
      double dx = h / dh;
      x -= dx;
      if (std::fabs(dx) < 1e-14 * (1.0 + std::fabs(x))) break;
    }
    hermite_eval(n, x, &h, &dh);
    roots[i] = x;
    // w_i = n! / (He'_n(x_i))^2 for the exp(-x^2/2)/sqrt(2pi) weight.
    double w = std::exp(log_nfact - 2.0 * std::log(std::fabs(dh)));
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) {
    double h = 0.0, dh = 0.0;
    hermite_eval(n, 0.0, &h, &dh);
    rule.nodes[n / 2] = 0.0;
    rule.weights[n / 2] = std::exp(log_nfact - 2.0 * std::log(std::fabs(dh)));
  }
  return rule;
}

template <typename Builder>
const QuadratureRule& cached(std::map<int, QuadratureRule>& cache,
                             std::mutex& mu, int n, Builder build) {
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("quadrature order must be >= 1");
  static std::map<int, QuadratureRule> cache;
  static std::mutex mu;
  return cached(cache, mu, n, build_gauss_legendre);
}

QuadratureRule gauss_hermite_unit(int n) {
  if (n < 1) throw std::invalid_argument("quadrature order must be >= 1");
  static std::map<int, QuadratureRule> cache;
  static std::mutex mu;
  return cached(cache, mu, n, build_gauss_hermite);
}

}  // namespace kerrsim
