#include "kerrsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "kerrsim/errors.hpp"
#include "kerrsim/summation.hpp"

namespace kerrsim {
namespace {

void validate_inputs(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& y_errors, std::size_t min_points) {
  if (x.size() != y.size() || x.size() != y_errors.size()) {
    throw ValidationError("x, y, y_errors must have equal lengths");
  }
  if (x.size() < min_points) {
    throw ValidationError("need at least " + std::to_string(min_points) + " points");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError("x and y must be finite");
    }
    if (!(std::isfinite(y_errors[i]) && y_errors[i] > 0.0)) {
      throw ValidationError("y_errors must be positive and finite");
    }
  }
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_error = 0.0;
  double intercept_error = 0.0;
};

// Weighted least squares about the weighted mean of x, which keeps the
// normal equations well conditioned for narrow grids far from zero.
LineFit wls_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& sigma) {
  CompensatedSum sw, swx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (sigma[i] * sigma[i]);
    sw.add(w);
    swx.add(w * x[i]);
  }
  const double weight_total = sw.value();
  const double x_bar = swx.value() / weight_total;
  CompensatedSum sxx, sxy, swy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (sigma[i] * sigma[i]);
    const double dx = x[i] - x_bar;
    sxx.add(w * dx * dx);
    sxy.add(w * dx * y[i]);
    swy.add(w * y[i]);
  }
  const double s_xx = sxx.value();
  if (!(s_xx > 0.0)) throw SingularFit("all x values coincide");
  LineFit fit;
  fit.slope = sxy.value() / s_xx;
  fit.intercept = swy.value() / weight_total - fit.slope * x_bar;
  fit.slope_error = std::sqrt(1.0 / s_xx);
  fit.intercept_error = std::sqrt(1.0 / weight_total + x_bar * x_bar / s_xx);
  return fit;
}

double residual_norm_for(const FitResult& fit, const std::vector<double>& x,
                         const std::vector<double>& y, const std::vector<double>& sigma) {
  CompensatedSum chi2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (y[i] - fit_eval(fit, x[i])) / sigma[i];
    chi2.add(r * r);
  }
  return std::sqrt(std::max(0.0, chi2.value()));
}

// Gaussian elimination with partial pivoting on an n x n system with `rhs`
// right-hand sides stored column-major in b.
void solve_inplace(double a[4][4], double b[4][4], int n, int rhs) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    if (!(std::fabs(a[pivot][col]) > 0.0)) throw SingularFit("normal equations are singular");
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[pivot][c], a[col][c]);
      for (int c = 0; c < rhs; ++c) std::swap(b[pivot][c], b[col][c]);
    }
    const double inv = 1.0 / a[col][col];
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] * inv;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      for (int c = 0; c < rhs; ++c) b[r][c] -= f * b[col][c];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    const double inv = 1.0 / a[col][col];
    for (int c = 0; c < rhs; ++c) {
      double v = b[col][c];
      for (int k = col + 1; k < n; ++k) v -= a[col][k] * b[k][c];
      b[col][c] = v * inv;
    }
  }
}

double gaussian_model(const double p[4], double x) {
  const double d = x - p[1];
  return p[0] * std::exp(-d * d / (2.0 * p[2] * p[2])) + p[3];
}

double gaussian_chi2(const double p[4], const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& sigma) {
  CompensatedSum chi2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (y[i] - gaussian_model(p, x[i])) / sigma[i];
    chi2.add(r * r);
  }
  return chi2.value();
}

}  // namespace

FitResult fit_linear(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& y_errors) {
  validate_inputs(x, y, y_errors, 3);
  const LineFit line = wls_line(x, y, y_errors);
  FitResult fit;
  fit.kind = FitKind::linear;
  fit.parameters = {line.slope, line.intercept};
  fit.parameter_errors = {line.slope_error, line.intercept_error};
  fit.residual_norm = residual_norm_for(fit, x, y, y_errors);
  return fit;
}

FitResult fit_powerlaw(const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& y_errors) {
  validate_inputs(x, y, y_errors, 3);
  std::vector<double> lx(x.size()), ly(x.size()), ls(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) {
      throw ValidationError("power-law fits require strictly positive x and y");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    ls[i] = y_errors[i] / y[i];  // relative error = log-space error
  }
  const LineFit line = wls_line(lx, ly, ls);
  FitResult fit;
  fit.kind = FitKind::powerlaw;
  const double amplitude = std::exp(line.intercept);
  fit.parameters = {line.slope, amplitude};
  fit.parameter_errors = {line.slope_error, amplitude * line.intercept_error};
  fit.residual_norm = residual_norm_for(fit, x, y, y_errors);
  return fit;
}

FitResult fit_gaussian(const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& y_errors) {
  validate_inputs(x, y, y_errors, 5);

  // Moment-style initial guess: offset from the edges, peak at the largest
  // excursion, width a quarter of the span.
  double p[4];
  p[3] = 0.5 * (y.front() + y.back());
  std::size_t peak = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (std::fabs(y[i] - p[3]) > std::fabs(y[peak] - p[3])) peak = i;
  }
  p[0] = y[peak] - p[3];
  p[1] = x[peak];
  const auto [x_min, x_max] = std::minmax_element(x.begin(), x.end());
  p[2] = 0.25 * (*x_max - *x_min);
  if (!(p[2] > 0.0)) throw SingularFit("all x values coincide");
  if (p[0] == 0.0) p[0] = y_errors[peak];  // flat data: seed a minimal bump

  double chi2 = gaussian_chi2(p, x, y, y_errors);
  double lambda = 1e-3;
  bool converged = false;
  for (int iter = 0; iter < 200 && !converged; ++iter) {
    // Normal equations from the analytic Jacobian.
    double h[4][4] = {};
    double grad[4][4] = {};  // first column holds J^T W r
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - p[1];
      const double w2 = p[2] * p[2];
      const double e = std::exp(-d * d / (2.0 * w2));
      const double j[4] = {e, p[0] * e * d / w2, p[0] * e * d * d / (w2 * p[2]), 1.0};
      const double wt = 1.0 / (y_errors[i] * y_errors[i]);
      const double r = y[i] - gaussian_model(p, x[i]);
      for (int a = 0; a < 4; ++a) {
        grad[a][0] += wt * j[a] * r;
        for (int b = a; b < 4; ++b) h[a][b] += wt * j[a] * j[b];
      }
    }
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < a; ++b) h[a][b] = h[b][a];
    }
    double damped[4][4];
    double step[4][4];
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) damped[a][b] = h[a][b];
      damped[a][a] *= 1.0 + lambda;
      step[a][0] = grad[a][0];
    }
    solve_inplace(damped, step, 4, 1);

    double trial[4];
    for (int a = 0; a < 4; ++a) trial[a] = p[a] + step[a][0];
    const double trial_chi2 =
        std::isfinite(trial[2]) && trial[2] != 0.0 ? gaussian_chi2(trial, x, y, y_errors) : chi2 + 1.0;
    if (trial_chi2 <= chi2) {
      double step_scale = 0.0;
      for (int a = 0; a < 4; ++a) {
        step_scale = std::max(step_scale, std::fabs(step[a][0]) / (1.0 + std::fabs(p[a])));
      }
      const bool small_step = step_scale < 1e-12;
      const bool small_drop = chi2 - trial_chi2 <= 1e-12 * (chi2 + 1e-30);
      for (int a = 0; a < 4; ++a) p[a] = trial[a];
      chi2 = trial_chi2;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (small_step || small_drop) converged = true;
    } else {
      lambda *= 7.0;
      if (lambda > 1e14) break;
    }
  }
  if (!converged) throw NonConvergence("gaussian fit did not converge within the iteration budget");

  // Covariance from the undamped normal equations at the optimum.
  double h[4][4] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - p[1];
    const double w2 = p[2] * p[2];
    const double e = std::exp(-d * d / (2.0 * w2));
    const double j[4] = {e, p[0] * e * d / w2, p[0] * e * d * d / (w2 * p[2]), 1.0};
    const double wt = 1.0 / (y_errors[i] * y_errors[i]);
    for (int a = 0; a < 4; ++a) {
      for (int b = a; b < 4; ++b) h[a][b] += wt * j[a] * j[b];
    }
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < a; ++b) h[a][b] = h[b][a];
  }
  double cov[4][4] = {};
  for (int a = 0; a < 4; ++a) cov[a][a] = 1.0;
  solve_inplace(h, cov, 4, 4);

  FitResult fit;
  fit.kind = FitKind::gaussian;
  fit.parameters = {p[0], p[1], std::fabs(p[2]), p[3]};
  fit.parameter_errors.resize(4);
  for (int a = 0; a < 4; ++a) fit.parameter_errors[a] = std::sqrt(std::max(0.0, cov[a][a]));
  fit.residual_norm = residual_norm_for(fit, x, y, y_errors);
  return fit;
}

double fit_eval(const FitResult& fit, double x) {
  switch (fit.kind) {
    case FitKind::linear:
      return fit.parameters[0] * x + fit.parameters[1];
    case FitKind::gaussian: {
      const double d = x - fit.parameters[1];
      const double w = fit.parameters[2];
      return fit.parameters[0] * std::exp(-d * d / (2.0 * w * w)) + fit.parameters[3];
    }
    case FitKind::powerlaw:
      return fit.parameters[1] * std::pow(x, fit.parameters[0]);
  }
  return 0.0;
}

}  // namespace kerrsim
