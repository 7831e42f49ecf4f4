#pragma once

// Magnetic field of the current-carrying nanowire and its transverse
// gradients.
//
// Coordinates: the condensate centre is the origin, the wire runs along z
// and sits at (0, -d, 0), so the vibration direction y is also the direction
// of the separation d. The displacement vector from the wire to the centre is
// d_vec = (0, d, 0) and R = r + d_vec is the position relative to the wire.
//
// Three geometries:
//   dipole   - short-wire limit, B = mu0 I L  z x R / (4 pi |R|^3)
//   infinite - long-wire limit,  B = mu0 I    z x R_perp / (2 pi |R_perp|^2)
//   bent     - Biot-Savart over the finite filament z' in [-L/2, L/2] with
//              y-displacement q u(z'), u(z') = cos(pi z'/L) (u = 0 at the
//              clamps, u = 1 at midspan).

#include <optional>
#include <string>

#include <Eigen/Core>

namespace nwbec {

using Vec3 = Eigen::Vector3d;

enum class Geometry { dipole, infinite, bent };

const char* to_string(Geometry g);
std::optional<Geometry> geometry_from_string(const std::string& name);

struct NanowireModel {
  Geometry geometry = Geometry::dipole;
  double length = 0.0;          // L, m
  double distance = 0.0;        // d, m
  double current = 0.0;         // I, A (sign = direction along +z)
  double omega_nw = 0.0;        // mechanical frequency, rad/s
  double effective_mass = 0.0;  // modal mass, kg
  double kappa = 0.0;           // mechanical decay rate, 1/s
  double bend_amplitude = 0.0;  // static midspan displacement of the bent filament, m
  double line_tolerance = 1e-8; // relative tolerance of the Biot-Savart quadrature

  /// kappa = omega_nw / Q.
  static double kappa_from_quality(double omega_nw, double quality_factor);

  /// Throws DomainError on d <= 0, I == 0, omega_nw <= 0, m_eff <= 0,
  /// kappa < 0, or L <= 0 for the finite geometries.
  void validate() const;

  /// Zero-point amplitude sqrt(hbar / (2 m_eff omega_nw)) of the y mode, m.
  double zero_point_amplitude() const;
};

/// Transverse gradient (d/dy B_x, d/dy B_y), T/m.
struct TransverseGradient {
  double dBx = 0.0;
  double dBy = 0.0;
};

Vec3 field_dipole(const NanowireModel& model, const Vec3& r);
Vec3 field_infinite(const NanowireModel& model, const Vec3& r);
/// Finite filament with static displacement q u(z'); q in metres.
Vec3 field_bent(const NanowireModel& model, const Vec3& r, double q);

/// Dispatches on the geometry; `bent` uses model.bend_amplitude.
Vec3 field(const NanowireModel& model, const Vec3& r);

/// Position gradient d/dy of the static field. Analytic for dipole and
/// infinite wires; for the bent wire the Biot-Savart kernel is
/// differentiated under the integral at q = model.bend_amplitude.
TransverseGradient grad_y(const NanowireModel& model, const Vec3& r);

/// Modal gradient of the bent wire: -dB/dq at q = model.bend_amplitude,
/// i.e. the field change per metre of midspan displacement with mode shape
/// u(z). The sign makes a rigid translation (u = 1) reproduce grad_y.
/// Computed by differentiating the kernel under the integral.
TransverseGradient modal_gradient(const NanowireModel& model, const Vec3& r);

}  // namespace nwbec
