#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bgnflow/curve_mesh.hpp"
#include "bgnflow/errors.hpp"
#include "bgnflow/exact_flow.hpp"
#include "bgnflow/vec2.hpp"

namespace bgnflow {

// Error of a mesh against the exact curve at time t, measured on the
// interpolated projected curve. Unmeasured fields stay NaN.
struct ErrorReport {
  double t = 0.0;
  double err_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_h1 = std::numeric_limits<double>::quiet_NaN();
  double err_max = std::numeric_limits<double>::quiet_NaN();
  double mesh_ratio = 1.0;
};

// Projects every node onto the exact curve, builds the interpolated curve
// through the projected feet (same connectivity and degree), and measures
// the finite element function with nodal values x_j - foot_j on that
// curve: L2 norm, H1 seminorm (both by Gauss-Legendre quadrature), and the
// max nodal displacement.
inline ErrorReport projection_error(const CurveMesh& mesh,
                                    const ExactFlow& flow, double t) {
  const int n = mesh.node_count();
  VectorField feet(n);
  ErrorReport report;
  report.t = t;
  report.err_max = 0.0;
  for (int j = 0; j < n; ++j) {
    const ClosestPoint cp = flow.closest_point(mesh.position(j), t);
    feet[j] = cp.foot;
    report.err_max = std::max(report.err_max, cp.distance);
  }
  const CurveMesh foot_mesh = mesh.with_positions(feet);

  const auto& quad = mesh.ref().quadrature();
  const int nq = mesh.ref().quadrature_count();
  const int k = mesh.degree();
  double l2_sq = 0.0;
  double h1_sq = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    for (int q = 0; q < nq; ++q) {
      Vec2 err{0.0, 0.0};
      Vec2 err_d{0.0, 0.0};
      const auto& val = mesh.ref().basis_at_quad(q);
      const auto& der = mesh.ref().basis_deriv_at_quad(q);
      for (int a = 0; a <= k; ++a) {
        const int j = mesh.node_index(e, a);
        const Vec2 d = mesh.position(j) - feet[j];
        err += d * val[a];
        err_d += d * der[a];
      }
      const double jac = norm(foot_mesh.derivative_at_quad(e, q));
      l2_sq += quad.weights[q] * norm_sq(err) * jac;
      h1_sq += quad.weights[q] * norm_sq(err_d) / jac;
    }
  }
  report.err_l2 = std::sqrt(l2_sq);
  report.err_h1 = std::sqrt(h1_sq);
  report.mesh_ratio = mesh_ratio(mesh);
  return report;
}

// Orders p_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}) between consecutive
// refinements. Nonpositive errors make the order undefined; those slots
// hold NaN.
inline std::vector<double> convergence_order(const std::vector<double>& errors,
                                             const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2) {
    throw InvalidArgumentError(
        "convergence_order: need two equally long sequences");
  }
  for (std::size_t i = 1; i < hs.size(); ++i) {
    if (!(hs[i] < hs[i - 1])) {
      throw InvalidArgumentError(
          "convergence_order: mesh sizes must decrease strictly");
    }
  }
  std::vector<double> orders(errors.size() - 1,
                             std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    if (errors[i] > 0.0 && errors[i + 1] > 0.0) {
      orders[i] =
          std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]);
    }
  }
  return orders;
}

// Least-squares slope of log(error) against log(h) over the entries where
// both are positive and finite. NaN when fewer than two points qualify.
inline double fitted_order(const std::vector<double>& hs,
                           const std::vector<double>& errors) {
  if (hs.size() != errors.size()) {
    throw InvalidArgumentError("fitted_order: length mismatch");
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (hs[i] > 0.0 && errors[i] > 0.0 && std::isfinite(hs[i]) &&
        std::isfinite(errors[i])) {
      lx.push_back(std::log(hs[i]));
      ly.push_back(std::log(errors[i]));
    }
  }
  const std::size_t m = lx.size();
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// Per-snapshot mesh ratio along a trajectory.
inline std::vector<std::pair<double, double>> track_mesh_quality(
    const std::vector<std::pair<double, CurveMesh>>& trajectory) {
  std::vector<std::pair<double, double>> series;
  series.reserve(trajectory.size());
  for (const auto& [t, mesh] : trajectory) {
    series.emplace_back(t, mesh_ratio(mesh));
  }
  return series;
}

}  // namespace bgnflow
