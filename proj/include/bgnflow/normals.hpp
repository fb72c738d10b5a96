#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bgnflow/banded_matrix.hpp"
#include "bgnflow/curve_mesh.hpp"
#include "bgnflow/errors.hpp"
#include "bgnflow/vec2.hpp"

namespace bgnflow {

// Unit normal of one element at reference coordinate xi: the tangent
// rotated by -90 degrees, outward for counterclockwise curves.
inline Vec2 piecewise_normal(const CurveMesh& mesh, int element, double xi) {
  const Vec2 d = mesh.derivative_at(element, xi);
  const double len = norm(d);
  if (!(len > 0.0)) {
    throw MeshDegenerationError("piecewise_normal: zero tangent");
  }
  return rotate_minus_90(d / len);
}

// Diagonal of the lumped mass form: m_j = sum over elements owning node j
// of (Gauss-Lobatto weight at j's local point) * |dF/dxi| there. Summing
// m_j recovers the Gauss-Lobatto arclength of the curve.
struct LumpedWeights {
  std::vector<double> m;
};

inline LumpedWeights lumped_weights(const CurveMesh& mesh) {
  LumpedWeights lw;
  lw.m.assign(mesh.node_count(), 0.0);
  const auto& lobatto_w = mesh.ref().lobatto().weights;
  for (int e = 0; e < mesh.element_count(); ++e) {
    for (int a = 0; a <= mesh.degree(); ++a) {
      lw.m[mesh.node_index(e, a)] +=
          lobatto_w[a] * norm(mesh.derivative_at_node(e, a));
    }
  }
  return lw;
}

// Lumped L2 projection of the piecewise unit normal: at junctions the
// two one-sided normals are blended with weights (Lobatto weight *
// one-sided |dF/dxi|), then divided by the lumped weight. |n_bar| = 1 at
// element-interior nodes and < 1 at junctions; it is deliberately not
// renormalized — the time step uses it as is.
struct AveragedNormal {
  VectorField n;
};

inline AveragedNormal averaged_normal(const CurveMesh& mesh,
                                      const LumpedWeights& mw) {
  AveragedNormal nb;
  nb.n.assign(mesh.node_count(), Vec2{});
  const auto& lobatto_w = mesh.ref().lobatto().weights;
  for (int e = 0; e < mesh.element_count(); ++e) {
    for (int a = 0; a <= mesh.degree(); ++a) {
      const Vec2 d = mesh.derivative_at_node(e, a);
      const double len = norm(d);
      if (!(len > 0.0)) {
        throw MeshDegenerationError("averaged_normal: zero tangent at node");
      }
      nb.n[mesh.node_index(e, a)] += lobatto_w[a] * rotate_minus_90(d);
    }
  }
  for (int j = 0; j < mesh.node_count(); ++j) {
    nb.n[j] = nb.n[j] / mw.m[j];
  }
  return nb;
}

// Nodal curvature diagnostic from the weak identity -Laplace(id) = H n:
// kappa_j = n_bar_j . (K id)_j / (m_j |n_bar_j|^2). Positive for convex
// counterclockwise curves; exactly sqrt(2) at the vertices of the square
// inscribed in the unit circle (k=1).
inline ScalarField discrete_curvature(const CurveMesh& mesh,
                                      const CyclicBandedMatrix& stiffness,
                                      const LumpedWeights& mw,
                                      const AveragedNormal& nb) {
  const int n = mesh.node_count();
  std::vector<double> kx(n), ky(n);
  for (int j = 0; j < n; ++j) {
    kx[j] = mesh.position(j).x;
    ky[j] = mesh.position(j).y;
  }
  kx = stiffness.apply(kx);
  ky = stiffness.apply(ky);
  ScalarField kappa(n);
  for (int j = 0; j < n; ++j) {
    const double nn = norm_sq(nb.n[j]);
    if (!(nn > 0.0)) {
      throw DegenerateNormalError("discrete_curvature: zero averaged normal at node " +
                                  std::to_string(j));
    }
    kappa[j] = (nb.n[j].x * kx[j] + nb.n[j].y * ky[j]) / (mw.m[j] * nn);
  }
  return kappa;
}

}  // namespace bgnflow
