#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bgnflow/errors.hpp"

namespace bgnflow {

struct QuadratureRule {
  std::vector<double> nodes;    // ascending in [-1, 1]
  std::vector<double> weights;  // positive, sum to 2
};

namespace detail {

// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
inline void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = p0;
    dp = 0.0;
    return;
  }
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

// Every rule is validated against the monomial moment system: no node or
// weight is trusted unless Σ w ξ^j reproduces ∫ξ^j dξ for all j the rule
// must integrate exactly.
inline void check_moments(const QuadratureRule& rule, int exact_degree,
                          const char* name) {
  for (int j = 0; j <= exact_degree; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      s += rule.weights[i] * std::pow(rule.nodes[i], j);
    }
    const double exact = (j % 2 == 0) ? 2.0 / (j + 1) : 0.0;
    if (std::abs(s - exact) > 1e-14) {
      throw NonconvergenceError(std::string(name) +
                                " rule failed the moment check at degree " +
                                std::to_string(j));
    }
  }
}

}  // namespace detail

// n-point Gauss-Legendre rule, exact through degree 2n-1.
inline QuadratureRule gauss_legendre_rule(int n) {
  if (n < 1) throw InvalidArgumentError("gauss_legendre_rule: n must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      detail::legendre(n, x, p, dp);
      const double step = p / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    detail::legendre(n, x, p, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -std::abs(x);
    rule.nodes[n - 1 - i] = std::abs(x);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  detail::check_moments(rule, 2 * n - 1, "Gauss-Legendre");
  return rule;
}

// (k+1)-point Gauss-Lobatto rule (endpoints included), exact through
// degree 2k-1.
inline QuadratureRule gauss_lobatto_rule(int k) {
  if (k < 1) throw InvalidArgumentError("gauss_lobatto_rule: degree must be >= 1");
  const int n = k + 1;
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.nodes.front() = -1.0;
  rule.nodes.back() = 1.0;
  // Interior nodes are the roots of P_k'; Newton with P_k'' from the
  // Legendre differential equation.
  for (int i = 1; i < k; ++i) {
    double x = std::cos(M_PI * (k - i) / k);
    for (int it = 0; it < 100; ++it) {
      double p = 0.0, dp = 0.0;
      detail::legendre(k, x, p, dp);
      const double d2p = (2.0 * x * dp - k * (k + 1) * p) / (1.0 - x * x);
      const double step = dp / d2p;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    rule.nodes[i] = x;
  }
  // Symmetrize the interior nodes exactly.
  for (int i = 1; i < n - 1 - i; ++i) {
    const double half = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    rule.nodes[i] = -half;
    rule.nodes[n - 1 - i] = half;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  for (int i = 0; i < n; ++i) {
    double p = 0.0, dp = 0.0;
    detail::legendre(k, rule.nodes[i], p, dp);
    rule.weights[i] = 2.0 / (k * (k + 1) * p * p);
  }
  detail::check_moments(rule, 2 * k - 1, "Gauss-Lobatto");
  return rule;
}

// Lagrange basis {psi_i} on the given nodes, evaluated at xi.
inline std::vector<double> lagrange_values(const std::vector<double>& nodes,
                                           double xi) {
  const std::size_t m = nodes.size();
  std::vector<double> vals(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) vals[i] *= (xi - nodes[j]) / (nodes[i] - nodes[j]);
    }
  }
  return vals;
}

// Derivatives psi_i'(xi); the expanded product form stays exact when xi
// coincides with a node.
inline std::vector<double> lagrange_derivatives(
    const std::vector<double>& nodes, double xi) {
  const std::size_t m = nodes.size();
  std::vector<double> ders(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < m; ++l) {
      if (l == i) continue;
      double term = 1.0 / (nodes[i] - nodes[l]);
      for (std::size_t j = 0; j < m; ++j) {
        if (j != i && j != l) term *= (xi - nodes[j]) / (nodes[i] - nodes[j]);
      }
      ders[i] += term;
    }
  }
  return ders;
}

// Per-degree tables shared by every element: the Gauss-Lobatto nodal rule
// (the finite element nodes coincide with its points, which is what makes
// the lumped mass diagonal), a Gauss-Legendre rule for non-lumped
// integrals, and the basis values/derivatives at both point sets.
class ReferenceElement {
 public:
  ReferenceElement(int degree, int quadrature_points = 0)
      : degree_(degree),
        lobatto_(gauss_lobatto_rule(degree)),
        quad_(gauss_legendre_rule(quadrature_points > 0 ? quadrature_points
                                                        : 2 * degree + 2)) {
    const int nq = static_cast<int>(quad_.nodes.size());
    basis_at_quad_.resize(nq);
    basis_deriv_at_quad_.resize(nq);
    for (int q = 0; q < nq; ++q) {
      basis_at_quad_[q] = lagrange_values(lobatto_.nodes, quad_.nodes[q]);
      basis_deriv_at_quad_[q] =
          lagrange_derivatives(lobatto_.nodes, quad_.nodes[q]);
    }
    basis_deriv_at_nodes_.resize(degree + 1);
    for (int a = 0; a <= degree; ++a) {
      basis_deriv_at_nodes_[a] =
          lagrange_derivatives(lobatto_.nodes, lobatto_.nodes[a]);
    }
  }

  int degree() const { return degree_; }
  int node_count() const { return degree_ + 1; }
  int quadrature_count() const { return static_cast<int>(quad_.nodes.size()); }

  const QuadratureRule& lobatto() const { return lobatto_; }
  const QuadratureRule& quadrature() const { return quad_; }

  // basis_at_quad(q)[a] = psi_a(xi_q)
  const std::vector<double>& basis_at_quad(int q) const {
    return basis_at_quad_[q];
  }
  const std::vector<double>& basis_deriv_at_quad(int q) const {
    return basis_deriv_at_quad_[q];
  }
  // basis_deriv_at_node(a)[b] = psi_b'(lobatto node a)
  const std::vector<double>& basis_deriv_at_node(int a) const {
    return basis_deriv_at_nodes_[a];
  }

 private:
  int degree_;
  QuadratureRule lobatto_;
  QuadratureRule quad_;
  std::vector<std::vector<double>> basis_at_quad_;
  std::vector<std::vector<double>> basis_deriv_at_quad_;
  std::vector<std::vector<double>> basis_deriv_at_nodes_;
};

}  // namespace bgnflow
