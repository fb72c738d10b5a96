#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bgnflow/errors.hpp"
#include "bgnflow/quadrature.hpp"
#include "bgnflow/vec2.hpp"

namespace bgnflow {

// Closed degree-k curve mesh: J elements, N = J*k nodes, junction nodes
// shared between neighbours. Element e covers global nodes e*k .. e*k+k
// (mod N) in order. ref_lengths are the chord lengths of the initial flat
// segments and stay frozen for the life of a flow; positions are the only
// state a time step replaces.
class CurveMesh {
 public:
  CurveMesh(std::shared_ptr<const ReferenceElement> ref, VectorField positions,
            std::vector<double> ref_lengths)
      : ref_(std::move(ref)),
        positions_(std::move(positions)),
        ref_lengths_(std::move(ref_lengths)) {
    if (!ref_) throw InvalidArgumentError("CurveMesh: null reference element");
    const int k = ref_->degree();
    const int J = static_cast<int>(ref_lengths_.size());
    if (J < 2) throw InvalidArgumentError("CurveMesh: need at least 2 elements");
    if (static_cast<int>(positions_.size()) != J * k) {
      throw InvalidArgumentError("CurveMesh: positions size must be J*k");
    }
    for (double len : ref_lengths_) {
      if (!(len > 0.0)) {
        throw InvalidGeometryError("CurveMesh: nonpositive reference length");
      }
    }
    verify_jacobians();
  }

  int degree() const { return ref_->degree(); }
  int element_count() const { return static_cast<int>(ref_lengths_.size()); }
  int node_count() const { return static_cast<int>(positions_.size()); }

  const ReferenceElement& ref() const { return *ref_; }
  std::shared_ptr<const ReferenceElement> ref_ptr() const { return ref_; }
  const VectorField& positions() const { return positions_; }
  const std::vector<double>& ref_lengths() const { return ref_lengths_; }
  Vec2 position(int node) const { return positions_[node]; }

  int node_index(int element, int local) const {
    return (element * degree() + local) % node_count();
  }

  // F_e(xi): position at reference coordinate xi in [-1, 1].
  Vec2 point_at(int element, double xi) const {
    const auto vals = lagrange_values(ref_->lobatto().nodes, xi);
    Vec2 p{};
    for (int a = 0; a <= degree(); ++a) {
      p += vals[a] * positions_[node_index(element, a)];
    }
    return p;
  }

  // dF_e/dxi at arbitrary xi.
  Vec2 derivative_at(int element, double xi) const {
    const auto ders = lagrange_derivatives(ref_->lobatto().nodes, xi);
    Vec2 d{};
    for (int a = 0; a <= degree(); ++a) {
      d += ders[a] * positions_[node_index(element, a)];
    }
    return d;
  }

  // dF_e/dxi at Gauss-Legendre point q (precomputed basis tables).
  Vec2 derivative_at_quad(int element, int q) const {
    const auto& ders = ref_->basis_deriv_at_quad(q);
    Vec2 d{};
    for (int a = 0; a <= degree(); ++a) {
      d += ders[a] * positions_[node_index(element, a)];
    }
    return d;
  }

  Vec2 point_at_quad(int element, int q) const {
    const auto& vals = ref_->basis_at_quad(q);
    Vec2 p{};
    for (int a = 0; a <= degree(); ++a) {
      p += vals[a] * positions_[node_index(element, a)];
    }
    return p;
  }

  // dF_e/dxi at the element's own Gauss-Lobatto node a.
  Vec2 derivative_at_node(int element, int a) const {
    const auto& ders = ref_->basis_deriv_at_node(a);
    Vec2 d{};
    for (int b = 0; b <= degree(); ++b) {
      d += ders[b] * positions_[node_index(element, b)];
    }
    return d;
  }

  // Same connectivity and frozen reference lengths, new node positions;
  // Jacobian positivity is re-verified.
  CurveMesh with_positions(VectorField new_positions) const {
    return CurveMesh(ref_, std::move(new_positions), ref_lengths_);
  }

 private:
  void verify_jacobians() const {
    const int nq = ref_->quadrature_count();
    for (int e = 0; e < element_count(); ++e) {
      const double floor = 1e-12 * ref_lengths_[e];
      for (int q = 0; q < nq; ++q) {
        if (!(norm(derivative_at_quad(e, q)) > floor)) {
          throw MeshDegenerationError(
              "degenerate element " + std::to_string(e) +
              ": |F'| <= " + std::to_string(floor) + " at a quadrature point");
        }
      }
    }
  }

  std::shared_ptr<const ReferenceElement> ref_;
  VectorField positions_;
  std::vector<double> ref_lengths_;
};

// Interpolates a smooth closed curve over [0,1]: element e spans the
// parameter interval [e/J, (e+1)/J], its nodes sit at the affine images of
// the Gauss-Lobatto points, so every node lies exactly on the curve.
inline CurveMesh build_initial_mesh(
    const std::function<Vec2(double)>& curve, int elements, int degree,
    std::shared_ptr<const ReferenceElement> ref = nullptr) {
  if (degree < 1) throw InvalidArgumentError("build_initial_mesh: degree >= 1");
  if (elements < 3) throw InvalidArgumentError("build_initial_mesh: J >= 3");
  if (!ref) ref = std::make_shared<ReferenceElement>(degree);
  if (ref->degree() != degree) {
    throw InvalidArgumentError("build_initial_mesh: reference degree mismatch");
  }
  const int J = elements;
  const int k = degree;
  VectorField positions(J * k);
  for (int e = 0; e < J; ++e) {
    for (int a = 0; a < k; ++a) {  // the a = k node is the next element's start
      const double s = (e + 0.5 * (ref->lobatto().nodes[a] + 1.0)) / J;
      positions[(e * k + a) % (J * k)] = curve(s);
    }
  }
  std::vector<double> ref_lengths(J);
  for (int e = 0; e < J; ++e) {
    const Vec2 p0 = curve(static_cast<double>(e) / J);
    const Vec2 p1 = curve(static_cast<double>(e + 1) / J);
    const double chord = norm(p1 - p0);
    if (!(chord > 0.0)) {
      throw InvalidGeometryError(
          "build_initial_mesh: repeated element endpoints at element " +
          std::to_string(e));
    }
    ref_lengths[e] = chord;
  }
  return CurveMesh(std::move(ref), std::move(positions), std::move(ref_lengths));
}

// Gauss-Legendre arclength of one element.
inline double element_arclength(const CurveMesh& mesh, int element) {
  if (element < 0 || element >= mesh.element_count()) {
    throw InvalidArgumentError("element_arclength: element index out of range");
  }
  const auto& quad = mesh.ref().quadrature();
  double len = 0.0;
  for (int q = 0; q < mesh.ref().quadrature_count(); ++q) {
    len += quad.weights[q] * norm(mesh.derivative_at_quad(element, q));
  }
  return len;
}

inline double curve_perimeter(const CurveMesh& mesh) {
  double total = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    total += element_arclength(mesh, e);
  }
  return total;
}

// max/min element arclength; 1 for an equidistributed mesh.
inline double mesh_ratio(const CurveMesh& mesh) {
  double lo = element_arclength(mesh, 0);
  double hi = lo;
  for (int e = 1; e < mesh.element_count(); ++e) {
    const double len = element_arclength(mesh, e);
    lo = std::min(lo, len);
    hi = std::max(hi, len);
  }
  return hi / lo;
}

inline CurveMesh update_positions(const CurveMesh& mesh,
                                  const VectorField& new_positions) {
  if (new_positions.size() != mesh.positions().size()) {
    throw InvalidArgumentError("update_positions: size mismatch");
  }
  return mesh.with_positions(new_positions);
}

struct MeshSnapshot {
  int degree = 0;
  int elements = 0;
  double time = 0.0;
  VectorField positions;
};

// First line: `# bgnflow-mesh v1 k=<k> J=<J> t=<time>`; then one
// `index,x,y` line per node with 17 significant digits.
inline void write_mesh_snapshot(std::ostream& out, const CurveMesh& mesh,
                                double time) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# bgnflow-mesh v1 k=%d J=%d t=%.17g\n",
                mesh.degree(), mesh.element_count(), time);
  out << buf;
  for (int j = 0; j < mesh.node_count(); ++j) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", j, mesh.position(j).x,
                  mesh.position(j).y);
    out << buf;
  }
  if (!out) throw IoError("write_mesh_snapshot: stream failure");
}

inline void write_mesh_snapshot(const std::string& path, const CurveMesh& mesh,
                                double time) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_mesh_snapshot: cannot open " + path);
  write_mesh_snapshot(out, mesh, time);
}

inline MeshSnapshot read_mesh_snapshot(std::istream& in) {
  MeshSnapshot snap;
  std::string header;
  if (!std::getline(in, header)) {
    throw IoError("read_mesh_snapshot: missing header");
  }
  if (std::sscanf(header.c_str(), "# bgnflow-mesh v1 k=%d J=%d t=%lg",
                  &snap.degree, &snap.elements, &snap.time) != 3) {
    throw IoError("read_mesh_snapshot: malformed header: " + header);
  }
  if (snap.degree < 1 || snap.elements < 2) {
    throw IoError("read_mesh_snapshot: invalid k or J in header");
  }
  const int n = snap.degree * snap.elements;
  snap.positions.reserve(n);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int index = 0;
    double x = 0.0, y = 0.0;
    if (std::sscanf(line.c_str(), "%d,%lg,%lg", &index, &x, &y) != 3) {
      throw IoError("read_mesh_snapshot: malformed node line: " + line);
    }
    if (index != static_cast<int>(snap.positions.size())) {
      throw IoError("read_mesh_snapshot: node indices out of order");
    }
    snap.positions.push_back({x, y});
  }
  if (static_cast<int>(snap.positions.size()) != n) {
    throw IoError("read_mesh_snapshot: expected " + std::to_string(n) +
                  " nodes, found " + std::to_string(snap.positions.size()));
  }
  return snap;
}

inline MeshSnapshot read_mesh_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_mesh_snapshot: cannot open " + path);
  return read_mesh_snapshot(in);
}

}  // namespace bgnflow
