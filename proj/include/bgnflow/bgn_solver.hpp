#pragma once

#include <concepts>
#include <string>
#include <utility>
#include <vector>

#include "bgnflow/banded_matrix.hpp"
#include "bgnflow/curve_mesh.hpp"
#include "bgnflow/errors.hpp"
#include "bgnflow/linear_solver.hpp"
#include "bgnflow/normals.hpp"
#include "bgnflow/vec2.hpp"

namespace bgnflow {

// Galerkin matrix of the arclength Laplacian: K_{jl} = integral of
// dpsi_j/ds dpsi_l/ds over the curve, assembled on the reference interval
// where the metric factors reduce to 1/|F'_xi|. Symmetric, positive
// semidefinite, row sums zero.
inline CyclicBandedMatrix stiffness_matrix(const CurveMesh& mesh) {
  const int k = mesh.degree();
  CyclicBandedMatrix stiff(mesh.node_count(), k);
  const auto& quad = mesh.ref().quadrature();
  const int nq = mesh.ref().quadrature_count();
  for (int e = 0; e < mesh.element_count(); ++e) {
    for (int q = 0; q < nq; ++q) {
      const double jac = norm(mesh.derivative_at_quad(e, q));
      const double scale = quad.weights[q] / jac;
      const auto& der = mesh.ref().basis_deriv_at_quad(q);
      for (int a = 0; a <= k; ++a) {
        const int row = mesh.node_index(e, a);
        const double da = scale * der[a];
        for (int b = 0; b <= k; ++b) {
          stiff.at(row, b - a) += da * der[b];
        }
      }
    }
  }
  return stiff;
}

// Tangential stabilization forcing: the part of K x that the curvature
// term cannot represent, s_j = (I - n_j n_j^T)(K x)_j with the averaged
// normal used unnormalized. Vanishes wherever (K x)_j is parallel to a
// unit-length n_j.
inline VectorField stabilization_rhs(const CurveMesh& mesh,
                                     const CyclicBandedMatrix& stiffness,
                                     const AveragedNormal& nb) {
  const int n = mesh.node_count();
  std::vector<double> px(n), py(n);
  for (int j = 0; j < n; ++j) {
    px[j] = mesh.position(j).x;
    py[j] = mesh.position(j).y;
  }
  px = stiffness.apply(px);
  py = stiffness.apply(py);
  VectorField s(n);
  for (int j = 0; j < n; ++j) {
    const Vec2 kx{px[j], py[j]};
    s[j] = kx - nb.n[j] * dot(nb.n[j], kx);
  }
  return s;
}

// Coupled linear system for one transport step. Unknowns are interleaved
// per node as (X_x, X_y, kappa); rows per node are the two momentum
// equations (K X)_c - m kappa n_c = s_c and the normal-motion constraint
// n . X = n . (x + tau u).
struct BgnSystem {
  CyclicBandedMatrix matrix;
  std::vector<double> rhs;
};

inline BgnSystem assemble_bgn_system(const CurveMesh& mesh,
                                     const VectorField& velocity,
                                     double tau) {
  const int n = mesh.node_count();
  const int k = mesh.degree();
  if (static_cast<int>(velocity.size()) != n) {
    throw InvalidArgumentError(
        "assemble_bgn_system: velocity has " +
        std::to_string(velocity.size()) + " samples for " + std::to_string(n) +
        " nodes");
  }
  if (!(tau > 0.0)) {
    throw InvalidArgumentError("assemble_bgn_system: step size must be > 0");
  }
  const CyclicBandedMatrix stiff = stiffness_matrix(mesh);
  const LumpedWeights mw = lumped_weights(mesh);
  const AveragedNormal nb = averaged_normal(mesh, mw);
  for (int j = 0; j < n; ++j) {
    if (!(norm_sq(nb.n[j]) > 0.0)) {
      throw DegenerateNormalError(
          "assemble_bgn_system: zero averaged normal at node " +
          std::to_string(j));
    }
  }
  const VectorField s = stabilization_rhs(mesh, stiff, nb);

  BgnSystem sys{CyclicBandedMatrix(3 * n, 3 * k + 2),
                std::vector<double>(3 * n, 0.0)};
  for (int j = 0; j < n; ++j) {
    for (int o = -k; o <= k; ++o) {
      const double v = stiff.at(j, o);
      sys.matrix.at(3 * j, 3 * o) += v;
      sys.matrix.at(3 * j + 1, 3 * o) += v;
    }
    sys.matrix.at(3 * j, 2) -= mw.m[j] * nb.n[j].x;
    sys.matrix.at(3 * j + 1, 1) -= mw.m[j] * nb.n[j].y;
    sys.rhs[3 * j] = s[j].x;
    sys.rhs[3 * j + 1] = s[j].y;

    sys.matrix.at(3 * j + 2, -2) += nb.n[j].x;
    sys.matrix.at(3 * j + 2, -1) += nb.n[j].y;
    sys.rhs[3 * j + 2] = dot(nb.n[j], mesh.position(j) + velocity[j] * tau);
  }
  return sys;
}

inline std::vector<double> solve_linear(
    const BgnSystem& sys, SolveMethod method = SolveMethod::automatic) {
  return solve_cyclic_banded(sys.matrix, sys.rhs, method);
}

struct StepResult {
  CurveMesh mesh;
  ScalarField curvature;  // nodal kappa produced by the step
};

// One implicit transport step: solve for the new positions and curvature,
// then rebuild the mesh (element degeneracy is re-checked on construction).
inline StepResult bgn_step(const CurveMesh& mesh, const VectorField& velocity,
                           double tau,
                           SolveMethod method = SolveMethod::automatic) {
  const BgnSystem sys = assemble_bgn_system(mesh, velocity, tau);
  const std::vector<double> z = solve_linear(sys, method);
  const int n = mesh.node_count();
  VectorField pos(n);
  ScalarField kappa(n);
  for (int j = 0; j < n; ++j) {
    pos[j] = Vec2{z[3 * j], z[3 * j + 1]};
    kappa[j] = z[3 * j + 2];
  }
  return StepResult{update_positions(mesh, pos), std::move(kappa)};
}

template <typename Field>
  requires std::invocable<Field&, Vec2, double>
StepResult bgn_step(const CurveMesh& mesh, Field&& field, double time,
                    double tau, SolveMethod method = SolveMethod::automatic) {
  const int n = mesh.node_count();
  VectorField velocity(n);
  for (int j = 0; j < n; ++j) velocity[j] = field(mesh.position(j), time);
  return bgn_step(mesh, velocity, tau, method);
}

// Reference scheme for mesh-quality comparisons: move every node with the
// interpolated velocity, X^{m+1} = x + tau u(x).
inline CurveMesh lagrangian_step(const CurveMesh& mesh,
                                 const VectorField& velocity, double tau) {
  const int n = mesh.node_count();
  if (static_cast<int>(velocity.size()) != n) {
    throw InvalidArgumentError(
        "lagrangian_step: velocity has " + std::to_string(velocity.size()) +
        " samples for " + std::to_string(n) + " nodes");
  }
  if (!(tau > 0.0)) {
    throw InvalidArgumentError("lagrangian_step: step size must be > 0");
  }
  VectorField pos(n);
  for (int j = 0; j < n; ++j) {
    pos[j] = mesh.position(j) + velocity[j] * tau;
  }
  return update_positions(mesh, pos);
}

template <typename Field>
  requires std::invocable<Field&, Vec2, double>
CurveMesh lagrangian_step(const CurveMesh& mesh, Field&& field, double time,
                          double tau) {
  const int n = mesh.node_count();
  VectorField velocity(n);
  for (int j = 0; j < n; ++j) velocity[j] = field(mesh.position(j), time);
  return lagrangian_step(mesh, velocity, tau);
}

}  // namespace bgnflow
