#include "nwbec/nanowire_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Geometry>

#include "nwbec/constants.hpp"
#include "nwbec/errors.hpp"
#include "nwbec/quadrature.hpp"

namespace nwbec {

namespace {

constexpr double kMu0Over4Pi = constants::vacuum_permeability / (4.0 * constants::pi);

Vec3 relative_position(const NanowireModel& m, const Vec3& r) {
  return Vec3(r.x(), r.y() + m.distance, r.z());
}

void check_point(double dist, const NanowireModel& m) {
  if (!(dist > 1e-12 * m.distance)) {
    throw SingularityError("field evaluated on the current filament");
  }
}

// Biot-Savart over the filament y = -d + q u(z'), u = cos(pi z'/L).
// Which selects the integrand: the field, its y-gradient, or its q-derivative.
enum class Kernel { field, grad_y, grad_q };

Vec3 bent_integral(const NanowireModel& m, const Vec3& r, double q, Kernel which) {
  const double L = m.length;
  const double k = constants::pi / L;

  // Reject points on the filament itself.
  if (std::abs(r.z()) <= 0.5 * L) {
    const double yw = -m.distance + q * std::cos(k * r.z());
    check_point(std::hypot(r.x(), r.y() - yw), m);
  }

  auto integrand = [&](double zp) -> Vec3 {
    const double u = std::cos(k * zp);
    const double du = -k * std::sin(k * zp);
    const Vec3 t(0.0, q * du, 1.0);
    const Vec3 R(r.x(), r.y() + m.distance - q * u, r.z() - zp);
    const double n2 = R.squaredNorm();
    const double n = std::sqrt(n2);
    const double inv3 = 1.0 / (n2 * n);
    const Vec3 txr = t.cross(R);
    switch (which) {
      case Kernel::field:
        return txr * inv3;
      case Kernel::grad_y: {
        const Vec3 txy = t.cross(Vec3::UnitY());
        return txy * inv3 - 3.0 * R.y() * txr * inv3 / n2;
      }
      case Kernel::grad_q: {
        const Vec3 dt(0.0, du, 0.0);
        const Vec3 dR(0.0, -u, 0.0);
        const Vec3 dtxr = dt.cross(R) + t.cross(dR);
        return dtxr * inv3 - 3.0 * R.dot(dR) * txr * inv3 / n2;
      }
    }
    return Vec3::Zero();
  };

  std::array<double, 3> pts{-0.5 * L, std::clamp(r.z(), -0.5 * L, 0.5 * L), 0.5 * L};
  quad::Options opt;
  opt.rel_tol = m.line_tolerance;
  opt.max_intervals = 20000;
  const Vec3 v = quad::integrate_checked<Vec3>(integrand, std::span<const double>(pts), opt,
                                               "Biot-Savart line integral");
  return kMu0Over4Pi * m.current * v;
}

}  // namespace

const char* to_string(Geometry g) {
  switch (g) {
    case Geometry::dipole:
      return "dipole";
    case Geometry::infinite:
      return "infinite";
    case Geometry::bent:
      return "bent";
  }
  return "?";
}

std::optional<Geometry> geometry_from_string(const std::string& name) {
  if (name == "dipole") return Geometry::dipole;
  if (name == "infinite") return Geometry::infinite;
  if (name == "bent") return Geometry::bent;
  return std::nullopt;
}

double NanowireModel::kappa_from_quality(double omega_nw, double quality_factor) {
  if (!(quality_factor > 0.0)) throw DomainError("quality factor must be positive");
  return omega_nw / quality_factor;
}

void NanowireModel::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string("nanowire.") + what + " must be positive and finite");
    }
  };
  positive(distance, "distance");
  positive(omega_nw, "omega_nw");
  positive(effective_mass, "effective_mass");
  if (geometry != Geometry::infinite) positive(length, "length");
  if (current == 0.0 || !std::isfinite(current)) {
    throw DomainError("nanowire.current must be non-zero and finite");
  }
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw DomainError("nanowire.kappa must be non-negative");
  }
  if (!std::isfinite(bend_amplitude)) throw DomainError("nanowire.bend_amplitude must be finite");
}

double NanowireModel::zero_point_amplitude() const {
  return std::sqrt(constants::hbar / (2.0 * effective_mass * omega_nw));
}

Vec3 field_dipole(const NanowireModel& m, const Vec3& r) {
  const Vec3 R = relative_position(m, r);
  const double n = R.norm();
  check_point(n, m);
  const double c = kMu0Over4Pi * m.current * m.length / (n * n * n);
  return Vec3(-R.y() * c, R.x() * c, 0.0);
}

Vec3 field_infinite(const NanowireModel& m, const Vec3& r) {
  const Vec3 R = relative_position(m, r);
  const double rho2 = R.x() * R.x() + R.y() * R.y();
  check_point(std::sqrt(rho2), m);
  const double c = 2.0 * kMu0Over4Pi * m.current / rho2;
  return Vec3(-R.y() * c, R.x() * c, 0.0);
}

Vec3 field_bent(const NanowireModel& m, const Vec3& r, double q) {
  return bent_integral(m, r, q, Kernel::field);
}

Vec3 field(const NanowireModel& m, const Vec3& r) {
  switch (m.geometry) {
    case Geometry::dipole:
      return field_dipole(m, r);
    case Geometry::infinite:
      return field_infinite(m, r);
    case Geometry::bent:
      return field_bent(m, r, m.bend_amplitude);
  }
  return Vec3::Zero();
}

TransverseGradient grad_y(const NanowireModel& m, const Vec3& r) {
  const Vec3 R = relative_position(m, r);
  switch (m.geometry) {
    case Geometry::dipole: {
      const double n2 = R.squaredNorm();
      const double n = std::sqrt(n2);
      check_point(n, m);
      const double c = kMu0Over4Pi * m.current * m.length;
      const double inv3 = 1.0 / (n2 * n);
      const double inv5 = inv3 / n2;
      return {c * (-inv3 + 3.0 * R.y() * R.y() * inv5), c * (-3.0 * R.x() * R.y() * inv5)};
    }
    case Geometry::infinite: {
      const double rho2 = R.x() * R.x() + R.y() * R.y();
      check_point(std::sqrt(rho2), m);
      const double c = 2.0 * kMu0Over4Pi * m.current;
      const double inv2 = 1.0 / rho2;
      return {c * (-inv2 + 2.0 * R.y() * R.y() * inv2 * inv2),
              c * (-2.0 * R.x() * R.y() * inv2 * inv2)};
    }
    case Geometry::bent: {
      const Vec3 g = bent_integral(m, r, m.bend_amplitude, Kernel::grad_y);
      return {g.x(), g.y()};
    }
  }
  return {};
}

TransverseGradient modal_gradient(const NanowireModel& m, const Vec3& r) {
  if (m.geometry != Geometry::bent) {
    // A straight wire has no mode shape; the modal gradient is the rigid one.
    return grad_y(m, r);
  }
  const Vec3 g = bent_integral(m, r, m.bend_amplitude, Kernel::grad_q);
  return {-g.x(), -g.y()};
}

}  // namespace nwbec
