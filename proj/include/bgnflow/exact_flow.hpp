#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "bgnflow/errors.hpp"
#include "bgnflow/vec2.hpp"
#include "bgnflow/velocity_fields.hpp"

namespace bgnflow {

// Reference transport flow with a closed-form solution: each ray theta
// carries the point from radius r0(theta) at time 0 to radius 1 at time 1
// at constant speed, so the 3:1 ellipse morphs into the unit circle.
// gamma(t, theta) = ((1 - t) r0(theta) + t) (cos theta, sin theta).

inline Vec2 initial_ellipse(double xi) {
  const double a = 2.0 * M_PI * xi;
  return Vec2{std::cos(a), std::sin(a) / 3.0};
}

inline double ellipse_radius_d1(double theta) {
  const double r = ellipse_radius(theta);
  return -4.0 * r * r * r * std::sin(2.0 * theta);
}

inline double ellipse_radius_d2(double theta) {
  const double r = ellipse_radius(theta);
  const double dr = ellipse_radius_d1(theta);
  return -12.0 * r * r * dr * std::sin(2.0 * theta) -
         8.0 * r * r * r * std::cos(2.0 * theta);
}

inline Vec2 exact_position(double t, double theta) {
  const double rho = (1.0 - t) * ellipse_radius(theta) + t;
  return Vec2{rho * std::cos(theta), rho * std::sin(theta)};
}

inline Vec2 exact_position_d1(double t, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double rho = (1.0 - t) * ellipse_radius(theta) + t;
  const double drho = (1.0 - t) * ellipse_radius_d1(theta);
  return Vec2{drho * c - rho * s, drho * s + rho * c};
}

inline Vec2 exact_position_d2(double t, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double rho = (1.0 - t) * ellipse_radius(theta) + t;
  const double drho = (1.0 - t) * ellipse_radius_d1(theta);
  const double ddrho = (1.0 - t) * ellipse_radius_d2(theta);
  return Vec2{ddrho * c - 2.0 * drho * s - rho * c,
              ddrho * s + 2.0 * drho * c - rho * s};
}

struct ClosestPoint {
  double theta = 0.0;
  Vec2 foot;
  double distance = 0.0;
};

namespace detail {

constexpr int kSweepSamples = 512;

struct SweepTables {
  std::array<double, kSweepSamples> radius{};
  std::array<double, kSweepSamples> cos_theta{};
  std::array<double, kSweepSamples> sin_theta{};
};

inline const SweepTables& sweep_tables() {
  static const SweepTables tables = [] {
    SweepTables t;
    for (int i = 0; i < kSweepSamples; ++i) {
      const double theta = 2.0 * M_PI * i / kSweepSamples;
      t.radius[i] = ellipse_radius(theta);
      t.cos_theta[i] = std::cos(theta);
      t.sin_theta[i] = std::sin(theta);
    }
    return t;
  }();
  return tables;
}

inline double foot_distance_sq(Vec2 p, double t, double theta) {
  const Vec2 d = p - exact_position(t, theta);
  return norm_sq(d);
}

// Minimizes the squared distance over a bracket known to contain the
// minimum; used when the Newton iteration is unusable.
inline double golden_section(Vec2 p, double t, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = foot_distance_sq(p, t, c);
  double fd = foot_distance_sq(p, t, d);
  for (int it = 0; it < 90 && (b - a) > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = foot_distance_sq(p, t, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = foot_distance_sq(p, t, d);
    }
  }
  return 0.5 * (a + b);
}

// Newton on the stationarity condition (p - gamma) . gamma' = 0. Returns
// the stationary angle, or falls back to a bracketed search when the
// iteration leaves the basin.
inline double newton_foot(Vec2 p, double t, double theta0) {
  double theta = theta0;
  for (int it = 0; it < 40; ++it) {
    const Vec2 gamma = exact_position(t, theta);
    const Vec2 d1 = exact_position_d1(t, theta);
    const Vec2 d2 = exact_position_d2(t, theta);
    const Vec2 r = p - gamma;
    const double grad = -2.0 * dot(r, d1);
    const double hess = 2.0 * dot(d1, d1) - 2.0 * dot(r, d2);
    if (!(hess > 0.0)) break;
    const double step = grad / hess;
    if (!(std::abs(step) < 0.5)) break;
    theta -= step;
    if (std::abs(step) <= 1e-12) return theta;
  }
  return golden_section(p, t, theta0 - M_PI / 8.0, theta0 + M_PI / 8.0);
}

}  // namespace detail

// Closest point on the exact curve at time t. A dense angular sweep checks
// every result so a locally converged but globally wrong foot is always
// caught and corrected. Throws when p lies farther than tube_radius from
// the curve, which would make the projection unreliable.
inline ClosestPoint closest_point_exact(Vec2 p, double t,
                                        double tube_radius = 0.2) {
  double theta = detail::newton_foot(p, t, std::atan2(p.y, p.x));
  double best = detail::foot_distance_sq(p, t, theta);

  const auto& tab = detail::sweep_tables();
  const double p_sq = norm_sq(p);
  int sweep_arg = 0;
  double sweep_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < detail::kSweepSamples; ++i) {
    const double rho = (1.0 - t) * tab.radius[i] + t;
    const double g = p_sq + rho * rho -
                     2.0 * rho * (p.x * tab.cos_theta[i] + p.y * tab.sin_theta[i]);
    if (g < sweep_min) {
      sweep_min = g;
      sweep_arg = i;
    }
  }
  if (sweep_min < best - 1e-12 * std::max(1.0, best)) {
    const double theta_s = 2.0 * M_PI * sweep_arg / detail::kSweepSamples;
    double refined = detail::newton_foot(p, t, theta_s);
    double refined_g = detail::foot_distance_sq(p, t, refined);
    if (refined_g > sweep_min) {
      const double span = 2.0 * M_PI / detail::kSweepSamples;
      refined = detail::golden_section(p, t, theta_s - span, theta_s + span);
      refined_g = detail::foot_distance_sq(p, t, refined);
    }
    if (refined_g < best) {
      theta = refined;
      best = refined_g;
    }
  }

  ClosestPoint cp;
  cp.theta = theta;
  cp.foot = exact_position(t, theta);
  cp.distance = std::sqrt(best);
  if (cp.distance > tube_radius) {
    throw ProjectionDomainError(
        "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
        ") lies " + std::to_string(cp.distance) +
        " from the exact curve, beyond the projection tube radius " +
        std::to_string(tube_radius));
  }
  return cp;
}

// Handle bundling the closed-form flow with its projection-tube policy.
struct ExactFlow {
  double tube_radius = 0.2;

  Vec2 position(double t, double theta) const {
    return exact_position(t, theta);
  }
  ClosestPoint closest_point(Vec2 p, double t) const {
    return closest_point_exact(p, t, tube_radius);
  }
};

}  // namespace bgnflow
