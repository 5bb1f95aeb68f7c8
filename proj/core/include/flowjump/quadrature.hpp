#pragma once

#include <vector>

namespace flowjump {

/// Gauss-Legendre rule on [-1, 1] with nodes in increasing order.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Supported orders: 4, 8, 16, 32.
GaussRule gauss_legendre(int order);

/// Gauss-Legendre rule mapped to [a, b].
GaussRule gauss_legendre(int order, double a, double b);

}  // namespace flowjump
