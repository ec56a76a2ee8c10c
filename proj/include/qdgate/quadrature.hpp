#pragma once

#include <vector>

namespace qdgate::quadrature {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule mapped to [a, b].
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// n-point Gauss-Hermite rule for the weight exp(-x^2) on the real line.
Rule gauss_hermite(int n);

/// Gauss-Legendre rule on [0, inf) through q = scale * t / (1 - t).
Rule mapped_half_line(int n, double scale);

}  // namespace qdgate::quadrature
