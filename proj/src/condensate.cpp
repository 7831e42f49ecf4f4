#include "nwbec/condensate.hpp"

#include <cmath>
#include <string>

#include "nwbec/errors.hpp"

namespace nwbec {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be positive and finite, got " +
                      std::to_string(v));
  }
}

}  // namespace

double AtomSpecies::interaction() const {
  return 4.0 * constants::pi * constants::hbar * constants::hbar * scattering_length / mass;
}

void AtomSpecies::validate() const {
  require_positive(mass, "species.mass");
  require_positive(scattering_length, "species.scattering_length");
  if (!std::isfinite(lande_g) || lande_g == 0.0) {
    throw DomainError("species.lande_g must be finite and non-zero");
  }
}

void TrapConfig::validate() const {
  require_positive(omega_r, "trap.omega_r");
  require_positive(omega_z, "trap.omega_z");
  require_positive(offset_field, "trap.offset_field");
  if (!(atom_number >= 1.0) || !std::isfinite(atom_number)) {
    throw DomainError("trap.atom_number must be >= 1");
  }
}

double chemical_potential(const AtomSpecies& species, const TrapConfig& trap) {
  species.validate();
  trap.validate();
  const double g = species.interaction();
  const double base = 15.0 * trap.atom_number * g * trap.omega_r * trap.omega_r *
                      trap.omega_z / (8.0 * constants::pi);
  return std::pow(base, 0.4) * std::pow(0.5 * species.mass, 0.6);
}

Condensate::Condensate(AtomSpecies species, TrapConfig trap)
    : species_(species), trap_(trap) {
  mu_ = nwbec::chemical_potential(species_, trap_);
  g_ = species_.interaction();
  const double rr = std::sqrt(2.0 * mu_ / (species_.mass * trap_.omega_r * trap_.omega_r));
  const double rz = std::sqrt(2.0 * mu_ / (species_.mass * trap_.omega_z * trap_.omega_z));
  radii_ = Vec3(rr, rr, rz);
}

double Condensate::trap_potential(const Vec3& r) const {
  const double wr2 = trap_.omega_r * trap_.omega_r;
  const double wz2 = trap_.omega_z * trap_.omega_z;
  return 0.5 * species_.mass * (wr2 * (r.x() * r.x() + r.y() * r.y()) + wz2 * r.z() * r.z());
}

double Condensate::scattering_potential(const Vec3& r) const {
  // Written in scaled coordinates so that the boundary value is exactly 0.
  const Vec3 q = r.cwiseQuotient(radii_);
  const double s2 = q.squaredNorm();
  return s2 >= 1.0 ? 0.0 : mu_ * (1.0 - s2);
}

double Condensate::density(const Vec3& r) const { return scattering_potential(r) / g_; }

double Condensate::larmor_frequency() const {
  return std::abs(species_.lande_g) * constants::bohr_magneton * trap_.offset_field /
         constants::hbar;
}

double Condensate::bec_frequency() const {
  return (mu_ + std::abs(species_.lande_g) * constants::bohr_magneton * trap_.offset_field) /
         constants::hbar;
}

}  // namespace nwbec
