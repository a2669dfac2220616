#pragma once

#include <vector>

namespace kerrsim {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1]; nodes in ascending order, weights sum to 2.
QuadratureRule gauss_legendre(int n);

// Gauss-Hermite rule for the weight exp(-x^2/2)/sqrt(2*pi) (standard-normal
// expectation); weights sum to 1.
QuadratureRule gauss_hermite_unit(int n);

}  // namespace kerrsim
