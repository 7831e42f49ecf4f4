#pragma once

// Thomas-Fermi description of a magnetically trapped F=1, m_F=-1 condensate.
//
// Kinetic energy is neglected for the condensate and for the untrapped m_F=0
// band alike; the m_F=0 atoms only see the mean-field potential
// mu_0(r) = g |Phi_bec(r)|^2 = max(mu - V_T(r), 0).

#include <Eigen/Core>

#include "nwbec/constants.hpp"

namespace nwbec {

using Vec3 = Eigen::Vector3d;

struct AtomSpecies {
  double mass = constants::rb87_mass;                          // kg
  double lande_g = constants::rb87_lande_g;                    // g_F
  double scattering_length = constants::rb87_scattering_length;  // m

  /// s-wave interaction parameter g = 4 pi hbar^2 a_s / M (J m^3).
  double interaction() const;
  void validate() const;

  static AtomSpecies rubidium87() { return {}; }
};

struct TrapConfig {
  double omega_r = 0.0;       // radial trap frequency, rad/s
  double omega_z = 0.0;       // axial trap frequency, rad/s
  double atom_number = 0.0;   // N >= 1
  double offset_field = 0.0;  // B_offs, T

  void validate() const;
};

/// mu = (15 N g omega_r^2 omega_z / 8 pi)^(2/5) (M/2)^(3/5), in J.
/// Throws DomainError if any input is non-positive.
double chemical_potential(const AtomSpecies& species, const TrapConfig& trap);

/// Immutable after construction; every query is a pure function.
class Condensate {
 public:
  Condensate(AtomSpecies species, TrapConfig trap);

  const AtomSpecies& species() const { return species_; }
  const TrapConfig& trap() const { return trap_; }

  double chemical_potential() const { return mu_; }
  /// mu / hbar, the width of the m_F=0 band in rad/s.
  double band_width() const { return mu_ / constants::hbar; }
  double interaction() const { return g_; }

  /// Thomas-Fermi radii (R_x, R_y, R_z) with R_i = sqrt(2 mu / (M omega_i^2)).
  Vec3 tf_radii() const { return radii_; }

  /// V_T(r) = M/2 [omega_r^2 (x^2 + y^2) + omega_z^2 z^2].
  double trap_potential(const Vec3& r) const;

  /// |Phi_bec(r)|^2 = (mu - V_T)/g inside the ellipsoid, exactly 0 outside.
  double density(const Vec3& r) const;

  /// mu_0(r) = g |Phi_bec|^2, in [0, mu].
  double scattering_potential(const Vec3& r) const;

  /// omega_L = |g_F| mu_B B_offs / hbar.
  double larmor_frequency() const;

  /// omega_bec = (mu + |g_F| mu_B B_offs) / hbar; for g_F = -1/2 this is
  /// (mu + mu_B B_offs / 2) / hbar.
  double bec_frequency() const;

  /// Scaled position: r = (R_x s n_x, R_y s n_y, R_z s n_z) for s in [0,1]
  /// and a unit vector n maps the unit ball onto the cloud, with V_T = mu s^2.
  Vec3 from_scaled(double s, const Vec3& unit) const {
    return radii_.cwiseProduct(unit) * s;
  }

 private:
  AtomSpecies species_;
  TrapConfig trap_;
  double g_ = 0.0;
  double mu_ = 0.0;
  Vec3 radii_ = Vec3::Zero();
};

}  // namespace nwbec
