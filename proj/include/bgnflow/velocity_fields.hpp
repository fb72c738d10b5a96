#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "bgnflow/errors.hpp"
#include "bgnflow/vec2.hpp"

namespace bgnflow {

// Radial profile of the reference ellipse: the curve |x| = r0(atan2(y, x))
// is the 3:1 ellipse with semi-axes 1 and 1/3.
inline double ellipse_radius(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return 1.0 / std::sqrt(c * c + 9.0 * s * s);
}

// Prescribed transport velocities selectable from the command line.
//   zero              u = 0
//   constant:cx,cy    uniform translation
//   rotation:omega    rigid rotation about the origin
//   ellipse-radial    unit-time radial morph of the 3:1 ellipse to the
//                     unit circle: u(x) = (1 - r0(theta)) x / |x|
class VelocityField {
 public:
  static VelocityField zero() { return VelocityField(Kind::zero, {}, 0.0, "zero"); }

  static VelocityField constant(Vec2 c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "constant:%.17g,%.17g", c.x, c.y);
    return VelocityField(Kind::constant, c, 0.0, buf);
  }

  static VelocityField rotation(double omega) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "rotation:%.17g", omega);
    return VelocityField(Kind::rotation, {}, omega, buf);
  }

  static VelocityField ellipse_radial() {
    return VelocityField(Kind::ellipse_radial, {}, 0.0, "ellipse-radial");
  }

  Vec2 operator()(Vec2 x, double /*time*/) const {
    switch (kind_) {
      case Kind::zero:
        return Vec2{0.0, 0.0};
      case Kind::constant:
        return param_;
      case Kind::rotation:
        return Vec2{-omega_ * x.y, omega_ * x.x};
      case Kind::ellipse_radial: {
        const double r = norm(x);
        if (r < 1e-8) {
          throw InvalidArgumentError(
              "ellipse-radial velocity is undefined at the origin");
        }
        const double speed = 1.0 - ellipse_radius(std::atan2(x.y, x.x));
        return x * (speed / r);
      }
    }
    throw InvalidArgumentError("velocity field in invalid state");
  }

  const std::string& token() const { return token_; }

 private:
  enum class Kind { zero, constant, rotation, ellipse_radial };

  VelocityField(Kind kind, Vec2 param, double omega, std::string token)
      : kind_(kind), param_(param), omega_(omega), token_(std::move(token)) {}

  Kind kind_;
  Vec2 param_;
  double omega_;
  std::string token_;
};

namespace detail {

inline double parse_number(const std::string& text, const std::string& token) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw InvalidArgumentError("bad number '" + text + "' in field token '" +
                               token + "'");
  }
  return value;
}

}  // namespace detail

inline VelocityField parse_field_token(const std::string& token) {
  if (token == "zero") return VelocityField::zero();
  if (token == "ellipse-radial") return VelocityField::ellipse_radial();
  const std::size_t colon = token.find(':');
  const std::string head = token.substr(0, colon);
  if (colon != std::string::npos && head == "constant") {
    const std::string rest = token.substr(colon + 1);
    const std::size_t comma = rest.find(',');
    if (comma == std::string::npos) {
      throw InvalidArgumentError("field token '" + token +
                                 "' needs two comma-separated components");
    }
    return VelocityField::constant(
        Vec2{detail::parse_number(rest.substr(0, comma), token),
             detail::parse_number(rest.substr(comma + 1), token)});
  }
  if (colon != std::string::npos && head == "rotation") {
    return VelocityField::rotation(
        detail::parse_number(token.substr(colon + 1), token));
  }
  throw InvalidArgumentError(
      "unknown field token '" + token +
      "' (expected zero | constant:<cx>,<cy> | rotation:<omega> | "
      "ellipse-radial)");
}

}  // namespace bgnflow
