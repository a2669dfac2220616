#pragma once

#include <vector>

namespace kerrsim {

enum class FitKind { linear, gaussian, powerlaw };

struct FitResult {
  FitKind kind = FitKind::linear;
  std::vector<double> parameters;        // see each fitter for the order
  std::vector<double> parameter_errors;  // 1-sigma, from the WLS covariance
  double residual_norm = 0.0;            // sqrt(sum((y - fit)^2 / sigma^2))
};

// Weighted least squares y = slope*x + intercept; parameters {slope,
// intercept}. Requires >= 3 points, equal lengths, positive errors.
// Throws SingularFit when the design matrix is rank-deficient.
FitResult fit_linear(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& y_errors);

// y = amplitude * exp(-(x-center)^2/(2*width^2)) + offset; parameters
// {amplitude, center, width, offset}. Levenberg-Marquardt from a
// moment-based initial guess, fixed iteration budget (NonConvergence when
// exhausted). Requires >= 5 points.
FitResult fit_gaussian(const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& y_errors);

// y = amplitude * x^exponent, fit in log-log space with points weighted by
// relative error; parameters {exponent, amplitude}. Requires >= 3 points
// and strictly positive x and y.
FitResult fit_powerlaw(const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& y_errors);

// Model evaluation for the three kinds, used for residual reporting.
double fit_eval(const FitResult& fit, double x);

}  // namespace kerrsim
