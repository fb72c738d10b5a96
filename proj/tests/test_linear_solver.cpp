#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "test_support.hpp"

using namespace bgnflow;
using namespace bgnflow::testing;
using Catch::Matchers::WithinAbs;

namespace {

// residual check helper: ||A z - b||_inf relative to the problem scale
double residual_scale(const CyclicBandedMatrix& a, const std::vector<double>& z,
                      const std::vector<double>& b) {
  const std::vector<double> az = a.apply(z);
  double rnorm = 0.0, bnorm = 0.0, znorm = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    rnorm = std::max(rnorm, std::abs(az[i] - b[i]));
    bnorm = std::max(bnorm, std::abs(b[i]));
    znorm = std::max(znorm, std::abs(z[i]));
  }
  double anorm = 0.0;
  const auto dense = a.to_dense();
  const int n = a.size();
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(dense[i * std::size_t(n) + j]);
    anorm = std::max(anorm, row);
  }
  return rnorm / (anorm * znorm + bnorm + 1e-300);
}

}  // namespace

TEST_CASE("cyclic banded storage maps offsets to wrapped columns") {
  CyclicBandedMatrix a(6, 1);
  a.at(0, -1) = 7.0;  // column 5 via wraparound
  a.at(5, 1) = 3.0;   // column 0 via wraparound
  a.at(2, 0) = 1.5;
  CHECK(a.column(0, -1) == 5);
  CHECK(a.column(5, 1) == 0);
  CHECK(a.column(2, 0) == 2);
  const auto dense = a.to_dense();
  CHECK(dense[0 * 6 + 5] == 7.0);
  CHECK(dense[5 * 6 + 0] == 3.0);
  CHECK(dense[2 * 6 + 2] == 1.5);
  CHECK(a.max_abs() == 7.0);

  std::vector<double> x = {1, 2, 3, 4, 5, 6};
  const auto y = a.apply(x);
  CHECK_THAT(y[0], WithinAbs(7.0 * 6.0, 1e-15));
  CHECK_THAT(y[5], WithinAbs(3.0 * 1.0, 1e-15));
  CHECK_THAT(y[2], WithinAbs(1.5 * 3.0, 1e-15));
}

TEST_CASE("banded and dense solves agree on random cyclic systems") {
  for (int halfband : {1, 3, 5}) {
    const int n = 60;
    const CyclicBandedMatrix a = random_banded_matrix(n, halfband, 1234 + halfband);
    const std::vector<double> b = random_vector(n, 999 + halfband);
    const auto zd = solve_cyclic_banded(a, b, SolveMethod::dense);
    const auto zb = solve_cyclic_banded(a, b, SolveMethod::banded_woodbury);
    INFO("halfband=" << halfband);
    CHECK(max_abs_diff(zd, zb) <= 1e-10);
    CHECK(residual_scale(a, zd, b) <= 1e-10);
    CHECK(residual_scale(a, zb, b) <= 1e-10);
  }
}

TEST_CASE("solves reproduce manufactured solutions") {
  const int n = 40;
  const CyclicBandedMatrix a = random_banded_matrix(n, 2, 42);
  const std::vector<double> z_true = random_vector(n, 7);
  const std::vector<double> b = a.apply(z_true);
  for (SolveMethod m : {SolveMethod::automatic, SolveMethod::dense,
                        SolveMethod::banded_woodbury}) {
    const auto z = solve_cyclic_banded(a, b, m);
    CHECK(max_abs_diff(z, z_true) <= 1e-11);
  }
}

TEST_CASE("identity systems return the right-hand side") {
  const int n = 9;
  CyclicBandedMatrix eye(n, 2);
  for (int i = 0; i < n; ++i) eye.at(i, 0) = 1.0;
  const std::vector<double> b = random_vector(n, 5);
  const auto z = solve_cyclic_banded(eye, b);
  CHECK(max_abs_diff(z, b) <= 1e-15);
}

TEST_CASE("automatic method matches both explicit routes") {
  // large enough that the automatic route picks the banded factorisation
  const int n = 256;
  const CyclicBandedMatrix a = random_banded_matrix(n, 4, 2026);
  const std::vector<double> b = random_vector(n, 31);
  const auto za = solve_cyclic_banded(a, b);
  const auto zd = solve_cyclic_banded(a, b, SolveMethod::dense);
  CHECK(max_abs_diff(za, zd) <= 1e-10);
  CHECK(residual_scale(a, za, b) <= 1e-10);
}

TEST_CASE("wraparound corrections are solved exactly") {
  // heavy wrap coupling: every row near the seam reaches across it
  const int n = 30, hb = 4;
  CyclicBandedMatrix a = random_banded_matrix(n, hb, 77);
  for (int o = 1; o <= hb; ++o) {
    a.at(0, -o) = 2.0 + o;          // wraps to columns n-o
    a.at(n - 1, o) = -1.0 - 0.5 * o;  // wraps to columns o-1
  }
  const std::vector<double> z_true = random_vector(n, 8);
  const std::vector<double> b = a.apply(z_true);
  const auto z = solve_cyclic_banded(a, b, SolveMethod::banded_woodbury);
  CHECK(max_abs_diff(z, z_true) <= 1e-10);
}

TEST_CASE("singular and near-singular systems are reported") {
  SECTION("zero row") {
    CyclicBandedMatrix a = random_banded_matrix(12, 2, 3);
    for (int o = -2; o <= 2; ++o) a.at(4, o) = 0.0;
    const std::vector<double> b = random_vector(12, 4);
    CHECK_THROWS_AS(solve_cyclic_banded(a, b, SolveMethod::dense),
                    SingularSystemError);
    CHECK_THROWS_AS(solve_cyclic_banded(a, b, SolveMethod::banded_woodbury),
                    SingularSystemError);
  }
  SECTION("a row scaled to machine zero trips the pivot floor") {
    CyclicBandedMatrix a(8, 1);
    for (int i = 0; i < 8; ++i) {
      a.at(i, -1) = 1.0;
      a.at(i, 0) = 3.0;
      a.at(i, 1) = 1.0;
    }
    for (int o = -1; o <= 1; ++o) a.at(3, o) *= 1e-18;
    const std::vector<double> b = random_vector(8, 5);
    CHECK_THROWS_AS(solve_cyclic_banded(a, b), SingularSystemError);
  }
}

TEST_CASE("input validation") {
  const CyclicBandedMatrix a = random_banded_matrix(10, 2, 6);
  SECTION("right-hand side size must match") {
    CHECK_THROWS_AS(solve_cyclic_banded(a, std::vector<double>(9, 1.0)),
                    InvalidArgumentError);
  }
  SECTION("band too wide for the banded route") {
    const CyclicBandedMatrix wide = random_banded_matrix(5, 2, 9);
    const std::vector<double> b = random_vector(5, 10);
    // 2*2+1 == 5 == n: not representable as a strict band
    CHECK_THROWS_AS(solve_cyclic_banded(wide, b, SolveMethod::banded_woodbury),
                    InvalidArgumentError);
    // automatic falls back to the dense route and succeeds
    const auto z = solve_cyclic_banded(wide, b);
    CHECK(residual_scale(wide, z, b) <= 1e-10);
  }
}
