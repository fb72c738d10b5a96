#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "test_support.hpp"

using namespace bgnflow;
using namespace bgnflow::testing;
using Catch::Matchers::WithinAbs;

namespace {

VectorField zero_velocity(const CurveMesh& mesh) {
  return VectorField(mesh.node_count(), Vec2{0.0, 0.0});
}

VectorField constant_velocity(const CurveMesh& mesh, Vec2 c) {
  return VectorField(mesh.node_count(), c);
}

// K applied to the position coordinates, one Vec2 per node
VectorField stiffness_times_positions(const CurveMesh& mesh,
                                      const CyclicBandedMatrix& stiff) {
  const int n = mesh.node_count();
  std::vector<double> px(n), py(n);
  for (int j = 0; j < n; ++j) {
    px[j] = mesh.position(j).x;
    py[j] = mesh.position(j).y;
  }
  const auto kx = stiff.apply(px);
  const auto ky = stiff.apply(py);
  VectorField out(n);
  for (int j = 0; j < n; ++j) out[j] = {kx[j], ky[j]};
  return out;
}

}  // namespace

TEST_CASE("stiffness matrix entries match hand calculations") {
  SECTION("rectangle: inverse chord lengths on and off the diagonal") {
    const CurveMesh rect = rectangle_mesh();  // side lengths 2,1,2,1
    const auto k = stiffness_matrix(rect);
    REQUIRE(k.size() == 4);
    REQUIRE(k.halfband() == 1);
    // diagonal = sum of 1/L over the two incident sides
    CHECK_THAT(k.at(0, 0), WithinAbs(1.0 / 2.0 + 1.0 / 1.0, 1e-14));
    CHECK_THAT(k.at(1, 0), WithinAbs(1.0 / 2.0 + 1.0 / 1.0, 1e-14));
    // off-diagonal = -1/L of the shared side
    CHECK_THAT(k.at(0, 1), WithinAbs(-1.0 / 2.0, 1e-14));
    CHECK_THAT(k.at(1, 1), WithinAbs(-1.0 / 1.0, 1e-14));
    CHECK_THAT(k.at(2, 1), WithinAbs(-1.0 / 2.0, 1e-14));
    CHECK_THAT(k.at(3, 1), WithinAbs(-1.0 / 1.0, 1e-14));
  }
  SECTION("inscribed square: diagonal is sqrt(2)") {
    const auto k = stiffness_matrix(inscribed_square_mesh());
    for (int j = 0; j < 4; ++j) {
      CHECK_THAT(k.at(j, 0), WithinAbs(std::sqrt(2.0), 1e-14));
      CHECK_THAT(k.at(j, 1), WithinAbs(-std::sqrt(2.0) / 2.0, 1e-14));
    }
  }
}

TEST_CASE("stiffness matrix structural invariants") {
  const CurveMesh mesh = build_initial_mesh(initial_ellipse, 32, 3);
  const auto k = stiffness_matrix(mesh);
  const int n = k.size();
  SECTION("symmetry") {
    const auto dense = k.to_dense();
    const double scale = k.max_abs();
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        worst = std::max(worst,
                         std::abs(dense[i * std::size_t(n) + j] -
                                  dense[j * std::size_t(n) + i]));
      }
    }
    CHECK(worst <= 1e-13 * scale);
  }
  SECTION("rows annihilate constants") {
    const std::vector<double> ones(n, 1.0);
    const auto r = k.apply(ones);
    for (double v : r) CHECK_THAT(v, WithinAbs(0.0, 1e-12));
  }
  SECTION("positive semidefinite on random fields") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto f = random_vector(n, 100 + trial);
      const auto kf = k.apply(f);
      double quad = 0.0;
      for (int j = 0; j < n; ++j) quad += f[j] * kf[j];
      CHECK(quad >= -1e-12);
    }
  }
}

TEST_CASE("stabilization removes the normal component of K x") {
  SECTION("vanishes at smooth interior nodes of a circle mesh") {
    const CurveMesh mesh = circle_mesh(16, 2);
    const auto stiff = stiffness_matrix(mesh);
    const auto nb = averaged_normal(mesh, lumped_weights(mesh));
    const VectorField s = stabilization_rhs(mesh, stiff, nb);
    for (int e = 0; e < 16; ++e) {
      const int mid = mesh.node_index(e, 1);
      CHECK_THAT(norm(s[mid]), WithinAbs(0.0, 1e-12));
    }
  }
  SECTION("projects with the unnormalised averaged normal") {
    // s = (I - nbar nbar^T) Kx, so nbar . s = (1 - |nbar|^2)(nbar . Kx):
    // the normal component survives exactly where the averaged normal is
    // shorter than one (the junction nodes)
    const CurveMesh mesh = build_initial_mesh(initial_ellipse, 24, 2);
    const auto stiff = stiffness_matrix(mesh);
    const auto nb = averaged_normal(mesh, lumped_weights(mesh));
    const VectorField s = stabilization_rhs(mesh, stiff, nb);
    const VectorField kx = stiffness_times_positions(mesh, stiff);
    for (int j = 0; j < mesh.node_count(); ++j) {
      const double expect =
          (1.0 - norm_sq(nb.n[j])) * dot(nb.n[j], kx[j]);
      CHECK_THAT(dot(s[j], nb.n[j]), WithinAbs(expect, 1e-12));
      // the tangential part of Kx passes through untouched
      const Vec2 tangent = rotate_minus_90(nb.n[j]);
      CHECK_THAT(dot(s[j], tangent), WithinAbs(dot(kx[j], tangent), 1e-12));
    }
  }
  SECTION("translation leaves the stabilization unchanged") {
    const CurveMesh mesh = build_initial_mesh(initial_ellipse, 20, 1);
    VectorField moved = mesh.positions();
    for (auto& p : moved) p += Vec2{1.7, -0.4};
    const CurveMesh shifted = update_positions(mesh, moved);

    const auto s0 = stabilization_rhs(mesh, stiffness_matrix(mesh),
                                      averaged_normal(mesh, lumped_weights(mesh)));
    const auto s1 = stabilization_rhs(shifted, stiffness_matrix(shifted),
                                      averaged_normal(shifted, lumped_weights(shifted)));
    CHECK(max_position_diff(s0, s1) <= 1e-12);
  }
  SECTION("a zero normal disables the projection at that node") {
    const CurveMesh square = inscribed_square_mesh();
    const auto stiff = stiffness_matrix(square);
    AveragedNormal nb = averaged_normal(square, lumped_weights(square));
    nb.n[1] = {0.0, 0.0};
    const VectorField s = stabilization_rhs(square, stiff, nb);
    const VectorField kx = stiffness_times_positions(square, stiff);
    CHECK_THAT(norm(s[1] - kx[1]), WithinAbs(0.0, 1e-14));
  }
}

TEST_CASE("system assembly layout") {
  const CurveMesh mesh = build_initial_mesh(initial_ellipse, 16, 2);
  const int n = mesh.node_count();
  const BgnSystem sys = assemble_bgn_system(mesh, zero_velocity(mesh), 0.1);

  SECTION("three unknowns per node, banded with halfband 3k+2") {
    CHECK(sys.matrix.size() == 3 * n);
    CHECK(sys.matrix.halfband() == 3 * mesh.degree() + 2);
    CHECK(sys.rhs.size() == static_cast<std::size_t>(3 * n));
  }
  SECTION("constraint rows carry the averaged normal and lumped data") {
    const auto nb = averaged_normal(mesh, lumped_weights(mesh));
    for (int j = 0; j < n; ++j) {
      CHECK_THAT(sys.matrix.at(3 * j + 2, -2), WithinAbs(nb.n[j].x, 1e-15));
      CHECK_THAT(sys.matrix.at(3 * j + 2, -1), WithinAbs(nb.n[j].y, 1e-15));
      // zero velocity: constraint right-hand side is nbar . x
      CHECK_THAT(sys.rhs[3 * j + 2],
                 WithinAbs(dot(nb.n[j], mesh.position(j)), 1e-15));
    }
  }
  SECTION("curvature unknowns couple only to their own momentum rows") {
    const int size = sys.matrix.size();
    const int hb = sys.matrix.halfband();
    for (int row = 0; row < size; ++row) {
      for (int o = -hb; o <= hb; ++o) {
        const double v = sys.matrix.at(row, o);
        if (v == 0.0) continue;
        const int col = sys.matrix.column(row, o);
        if (col % 3 == 2) {
          // column of kappa_j: only rows 3j and 3j+1 may touch it
          CHECK(row / 3 == col / 3);
          CHECK(row % 3 != 2);
        }
      }
    }
  }
  SECTION("velocity size mismatches and bad steps are rejected") {
    CHECK_THROWS_AS(assemble_bgn_system(mesh, VectorField(n + 1), 0.1),
                    InvalidArgumentError);
    CHECK_THROWS_AS(assemble_bgn_system(mesh, zero_velocity(mesh), 0.0),
                    InvalidArgumentError);
    CHECK_THROWS_AS(assemble_bgn_system(mesh, zero_velocity(mesh), -1.0),
                    InvalidArgumentError);
  }
}

TEST_CASE("assembled system is solved by the transported exact pair") {
  // constant velocity: positions translate, curvature stays the stationary
  // curvature of the current shape
  const CurveMesh mesh = build_initial_mesh(initial_ellipse, 12, 2);
  const int n = mesh.node_count();
  const Vec2 c{0.3, -0.1};
  const double tau = 0.05;
  const BgnSystem sys = assemble_bgn_system(mesh, constant_velocity(mesh, c), tau);

  const auto stiff = stiffness_matrix(mesh);
  const auto mw = lumped_weights(mesh);
  const auto nb = averaged_normal(mesh, mw);
  const VectorField kx = stiffness_times_positions(mesh, stiff);

  std::vector<double> z(3 * n);
  for (int j = 0; j < n; ++j) {
    z[3 * j] = mesh.position(j).x + tau * c.x;
    z[3 * j + 1] = mesh.position(j).y + tau * c.y;
    z[3 * j + 2] = dot(nb.n[j], kx[j]) / mw.m[j];
  }
  const auto az = sys.matrix.apply(z);
  double scale = sys.matrix.max_abs();
  for (double v : z) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < 3 * n; ++i) {
    CHECK(std::abs(az[i] - sys.rhs[i]) <= 1e-11 * scale);
  }
}

TEST_CASE("time steps preserve exact states") {
  SECTION("zero velocity leaves the mesh stationary") {
    for (int k : {1, 2}) {
      const CurveMesh mesh = build_initial_mesh(initial_ellipse, 24, k);
      const StepResult step = bgn_step(mesh, zero_velocity(mesh), 0.1);
      CHECK(max_position_diff(step.mesh.positions(), mesh.positions()) <=
            1e-10);
      // curvature satisfies the lumped momentum identity m kappa = nbar . Kx
      const auto stiff = stiffness_matrix(mesh);
      const auto mw = lumped_weights(mesh);
      const auto nb = averaged_normal(mesh, mw);
      const VectorField kx = stiffness_times_positions(mesh, stiff);
      for (int j = 0; j < mesh.node_count(); ++j) {
        CHECK_THAT(mw.m[j] * step.curvature[j],
                   WithinAbs(dot(nb.n[j], kx[j]), 1e-10));
      }
    }
  }
  SECTION("stationary curvature scales the lumped diagnostic by |nbar|^2") {
    const CurveMesh mesh = build_initial_mesh(initial_ellipse, 24, 2);
    const StepResult step = bgn_step(mesh, zero_velocity(mesh), 0.1);
    const auto stiff = stiffness_matrix(mesh);
    const auto mw = lumped_weights(mesh);
    const auto nb = averaged_normal(mesh, mw);
    const ScalarField diag = discrete_curvature(mesh, stiff, mw, nb);
    for (int j = 0; j < mesh.node_count(); ++j) {
      CHECK_THAT(step.curvature[j], WithinAbs(norm_sq(nb.n[j]) * diag[j], 1e-9));
    }
  }
  SECTION("stationary square reports kappa = |nbar|^2 sqrt(2)") {
    const CurveMesh square = inscribed_square_mesh();
    const StepResult step = bgn_step(square, zero_velocity(square), 0.05);
    const double expect = 0.5 * std::sqrt(2.0);  // |nbar|^2 = cos^2(pi/4)
    for (double v : step.curvature) CHECK_THAT(v, WithinAbs(expect, 1e-10));
    CHECK(max_position_diff(step.mesh.positions(), square.positions()) <=
          1e-10);
  }
  SECTION("constant velocity translates every node exactly") {
    const CurveMesh mesh = build_initial_mesh(initial_ellipse, 16, 1);
    const Vec2 c{0.3, -0.1};
    const double tau = 0.125;
    const StepResult step = bgn_step(mesh, constant_velocity(mesh, c), tau);
    for (int j = 0; j < mesh.node_count(); ++j) {
      const Vec2 expect = mesh.position(j) + tau * c;
      CHECK(norm(step.mesh.position(j) - expect) <= 1e-10);
    }
  }
}

TEST_CASE("each step satisfies its nodal constraint") {
  const CurveMesh mesh = build_initial_mesh(initial_ellipse, 16, 1);
  const double tau = 1.0 / 16.0;
  const VelocityField field = VelocityField::ellipse_radial();
  VectorField vel(mesh.node_count());
  for (int j = 0; j < mesh.node_count(); ++j) {
    vel[j] = field(mesh.position(j), 0.0);
  }
  const auto nb = averaged_normal(mesh, lumped_weights(mesh));
  const StepResult step = bgn_step(mesh, vel, tau);
  for (int j = 0; j < mesh.node_count(); ++j) {
    const double lhs = dot(nb.n[j], step.mesh.position(j));
    const double rhs = dot(nb.n[j], mesh.position(j) + tau * vel[j]);
    CHECK_THAT(lhs - rhs, WithinAbs(0.0, 1e-10));
  }
}

TEST_CASE("steps are equivariant under rigid motions") {
  const CurveMesh mesh = build_initial_mesh(initial_ellipse, 16, 2);
  VectorField vel(mesh.node_count());
  const VelocityField field = VelocityField::ellipse_radial();
  for (int j = 0; j < mesh.node_count(); ++j) {
    vel[j] = field(mesh.position(j), 0.0);
  }
  const double tau = 0.05;
  const StepResult base = bgn_step(mesh, vel, tau);

  SECTION("translation") {
    const Vec2 shift{2.5, -1.25};
    VectorField moved = mesh.positions();
    for (auto& p : moved) p += shift;
    const CurveMesh shifted = update_positions(mesh, moved);
    const StepResult other = bgn_step(shifted, vel, tau);
    for (int j = 0; j < mesh.node_count(); ++j) {
      const Vec2 expect = base.mesh.position(j) + shift;
      CHECK(norm(other.mesh.position(j) - expect) <= 1e-10);
      CHECK_THAT(other.curvature[j], WithinAbs(base.curvature[j], 1e-9));
    }
  }
  SECTION("rotation") {
    const double ang = 0.61;
    const double c = std::cos(ang), s = std::sin(ang);
    auto rot = [&](Vec2 p) { return Vec2{c * p.x - s * p.y, s * p.x + c * p.y}; };
    VectorField moved = mesh.positions();
    for (auto& p : moved) p = rot(p);
    const CurveMesh rotated = update_positions(mesh, moved);
    VectorField rvel(vel.size());
    for (std::size_t j = 0; j < vel.size(); ++j) rvel[j] = rot(vel[j]);
    const StepResult other = bgn_step(rotated, rvel, tau);
    for (int j = 0; j < mesh.node_count(); ++j) {
      const Vec2 expect = rot(base.mesh.position(j));
      CHECK(norm(other.mesh.position(j) - expect) <= 1e-10);
      CHECK_THAT(other.curvature[j], WithinAbs(base.curvature[j], 1e-9));
    }
  }
}

TEST_CASE("solver routes agree on assembled systems") {
  const CurveMesh mesh = build_initial_mesh(initial_ellipse, 48, 2);
  VectorField vel(mesh.node_count());
  const VelocityField field = VelocityField::ellipse_radial();
  for (int j = 0; j < mesh.node_count(); ++j) {
    vel[j] = field(mesh.position(j), 0.0);
  }
  const BgnSystem sys = assemble_bgn_system(mesh, vel, 0.01);
  const auto zd = solve_linear(sys, SolveMethod::dense);
  const auto zb = solve_linear(sys, SolveMethod::banded_woodbury);
  CHECK(max_abs_diff(zd, zb) <= 1e-10);
}

TEST_CASE("degenerate normals abort the assembly") {
  // fold the polygon so the two equal-length edges at node 1 are exactly
  // antiparallel: their normal contributions cancel to exactly zero
  VectorField positions = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, {0.5, 1.0}};
  std::vector<double> ref_lengths(4);
  for (int j = 0; j < 4; ++j) {
    ref_lengths[j] = norm(positions[(j + 1) % 4] - positions[j]);
  }
  const CurveMesh folded(make_ref(1), positions, ref_lengths);
  CHECK_THROWS_AS(
      assemble_bgn_system(folded, VectorField(4, Vec2{0, 0}), 0.1),
      DegenerateNormalError);
}

TEST_CASE("explicit transport steps") {
  SECTION("zero velocity is the identity") {
    const CurveMesh mesh = build_initial_mesh(initial_ellipse, 16, 2);
    const CurveMesh next = lagrangian_step(mesh, zero_velocity(mesh), 0.1);
    CHECK(max_position_diff(next.positions(), mesh.positions()) == 0.0);
  }
  SECTION("constant velocity matches the implicit step") {
    const CurveMesh mesh = build_initial_mesh(initial_ellipse, 16, 1);
    const Vec2 c{0.3, -0.1};
    const double tau = 0.125;
    const CurveMesh expl = lagrangian_step(mesh, constant_velocity(mesh, c), tau);
    const StepResult impl = bgn_step(mesh, constant_velocity(mesh, c), tau);
    CHECK(max_position_diff(expl.positions(), impl.mesh.positions()) <= 1e-10);
  }
  SECTION("velocity collapsing an element is caught") {
    const CurveMesh mesh = circle_mesh(8, 1);
    VectorField vel = zero_velocity(mesh);
    const double tau = 0.5;
    vel[1] = (1.0 / tau) * (mesh.position(0) - mesh.position(1));
    CHECK_THROWS_AS(lagrangian_step(mesh, vel, tau), MeshDegenerationError);
  }
  SECTION("size mismatch is rejected") {
    const CurveMesh mesh = circle_mesh(8, 1);
    CHECK_THROWS_AS(lagrangian_step(mesh, VectorField(3), 0.1),
                    InvalidArgumentError);
  }
}

TEST_CASE("field-sampling step overloads match explicit nodal velocities") {
  const CurveMesh mesh = build_initial_mesh(initial_ellipse, 12, 2);
  const VelocityField field = VelocityField::rotation(0.8);
  const double t = 0.3, tau = 0.02;
  VectorField vel(mesh.node_count());
  for (int j = 0; j < mesh.node_count(); ++j) {
    vel[j] = field(mesh.position(j), t);
  }
  const StepResult a = bgn_step(mesh, field, t, tau);
  const StepResult b = bgn_step(mesh, vel, tau);
  CHECK(max_position_diff(a.mesh.positions(), b.mesh.positions()) == 0.0);
  const CurveMesh la = lagrangian_step(mesh, field, t, tau);
  const CurveMesh lb = lagrangian_step(mesh, vel, tau);
  CHECK(max_position_diff(la.positions(), lb.positions()) == 0.0);
}
