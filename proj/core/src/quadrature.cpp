#include "flowjump/quadrature.hpp"

#include <algorithm>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>

#include "flowjump/types.hpp"

namespace flowjump {

namespace {

template <unsigned N>
GaussRule expand() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  GaussRule rule;
  // Boost stores the non-negative half; even N has no node at zero.
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      rule.nodes.push_back(0.0);
      rule.weights.push_back(w[i]);
      continue;
    }
    rule.nodes.push_back(x[i]);
    rule.weights.push_back(w[i]);
    rule.nodes.push_back(-x[i]);
    rule.weights.push_back(w[i]);
  }
  std::vector<std::size_t> order(rule.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return rule.nodes[a] < rule.nodes[b]; });
  GaussRule sorted;
  for (auto i : order) {
    sorted.nodes.push_back(rule.nodes[i]);
    sorted.weights.push_back(rule.weights[i]);
  }
  return sorted;
}

}  // namespace

GaussRule gauss_legendre(int order) {
  switch (order) {
    case 4: return expand<4>();
    case 8: return expand<8>();
    case 16: return expand<16>();
    case 32: return expand<32>();
    default: throw InvalidInput("gauss_legendre: unsupported order");
  }
}

GaussRule gauss_legendre(int order, double a, double b) {
  GaussRule rule = gauss_legendre(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

}  // namespace flowjump
