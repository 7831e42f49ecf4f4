#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nwbec/condensate.hpp"
#include "nwbec/errors.hpp"

using namespace nwbec;
using constants::pi;

namespace {

TrapConfig reference_trap() { return {2 * pi * 500, 2 * pi * 200, 6e4, 1.143e-5}; }

// Atom number held by a Thomas-Fermi cloud of chemical potential mu, by
// direct radial quadrature of (mu - V_T)/g over the ellipsoid.
double atoms_for(double mu, const AtomSpecies& sp, const TrapConfig& t) {
  const double g = 4 * pi * constants::hbar * constants::hbar * sp.scattering_length / sp.mass;
  const double rr = std::sqrt(2 * mu / (sp.mass * t.omega_r * t.omega_r));
  const double rz = std::sqrt(2 * mu / (sp.mass * t.omega_z * t.omega_z));
  auto shell = [&](double s) { return 4 * pi * s * s * mu * (1 - s * s) / g; };
  return rr * rr * rz * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(shell, 0.0, 1.0);
}

double mu_by_bisection(const AtomSpecies& sp, const TrapConfig& t) {
  double lo = 1e-40, hi = 1e-25;
  for (int k = 0; k < 200; ++k) {
    const double mid = std::sqrt(lo * hi);
    (atoms_for(mid, sp, t) < t.atom_number ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace

TEST_CASE("reference trap: chemical potential and Thomas-Fermi size") {
  Condensate c(AtomSpecies::rubidium87(), reference_trap());
  CHECK(c.band_width() == doctest::Approx(4.3e4).epsilon(0.05));
  const Vec3 d = 2e6 * c.tf_radii();
  CHECK(d.x() == doctest::Approx(5.0).epsilon(0.05));
  CHECK(d.y() == doctest::Approx(5.0).epsilon(0.05));
  CHECK(d.z() == doctest::Approx(13.0).epsilon(0.05));
}

TEST_CASE("chemical potential scales as N^(2/5)") {
  TrapConfig a = reference_trap(), b = reference_trap();
  b.atom_number = 1;
  const auto sp = AtomSpecies::rubidium87();
  CHECK(chemical_potential(sp, a) / chemical_potential(sp, b) ==
        doctest::Approx(std::pow(6e4, 0.4)).epsilon(1e-12));
}

TEST_CASE("closed-form mu matches the normalisation oracle over three decades") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dec(0.0, 3.0);
  for (int k = 0; k < 12; ++k) {
    AtomSpecies sp;
    sp.scattering_length = 1e-9 * std::pow(10.0, dec(rng));
    TrapConfig t{2 * pi * 10 * std::pow(10.0, dec(rng)), 2 * pi * 10 * std::pow(10.0, dec(rng)),
                 1e3 * std::pow(10.0, dec(rng)), 1e-5};
    CHECK(chemical_potential(sp, t) == doctest::Approx(mu_by_bisection(sp, t)).epsilon(1e-6));
  }
}

TEST_CASE("density and scattering potential") {
  Condensate c(AtomSpecies::rubidium87(), reference_trap());
  const double mu = c.chemical_potential();
  const Vec3 R = c.tf_radii();
  CHECK(c.density(Vec3::Zero()) == doctest::Approx(mu / c.interaction()).epsilon(1e-14));
  CHECK(c.density(Vec3(R.x(), 0, 0)) == doctest::Approx(0.0).epsilon(1e-30));
  CHECK(c.density(Vec3(0, 0, 1.01 * R.z())) == 0.0);
  CHECK(c.density(Vec3(0, 0, 0.999999 * R.z())) >= 0.0);
  CHECK(c.scattering_potential(Vec3::Zero()) == doctest::Approx(mu));
  CHECK(c.scattering_potential(Vec3(0, 2 * R.y(), 0)) == 0.0);
  // V_T = mu / 2 at s = 1/sqrt(2)
  const Vec3 half = c.from_scaled(std::sqrt(0.5), Vec3(1, 1, 1).normalized());
  CHECK(c.trap_potential(half) == doctest::Approx(0.5 * mu).epsilon(1e-12));
  CHECK(c.scattering_potential(half) == doctest::Approx(0.5 * mu).epsilon(1e-12));

  // int |Phi|^2 = N on a tensor grid in scaled coordinates
  const int n = 400;
  double sum = 0;
  for (int k = 0; k < n; ++k) {
    const double s = (k + 0.5) / n;
    sum += 4 * pi * s * s * c.density(c.from_scaled(s, Vec3(0, 0, 1))) / n;
  }
  CHECK(sum * R.prod() == doctest::Approx(6e4).epsilon(1e-4));
}

TEST_CASE("radii scaling and frequencies") {
  TrapConfig iso{2 * pi * 300, 2 * pi * 300, 1e4, 1e-5};
  Condensate a(AtomSpecies::rubidium87(), iso);
  CHECK(a.tf_radii().x() == doctest::Approx(a.tf_radii().z()).epsilon(1e-14));
  const double mu = a.chemical_potential();
  const double m = a.species().mass;
  CHECK(a.tf_radii().z() == doctest::Approx(std::sqrt(2 * mu / (m * iso.omega_z * iso.omega_z))));
  // at fixed N, R ~ mu^(1/2) / omega and mu ~ (omega_r^2 omega_z)^(2/5)
  TrapConfig tight = iso;
  tight.omega_z *= 4;
  Condensate b(AtomSpecies::rubidium87(), tight);
  CHECK(b.tf_radii().z() / a.tf_radii().z() == doctest::Approx(std::pow(4.0, 0.2) / 4).epsilon(1e-12));
  CHECK(b.tf_radii().x() / a.tf_radii().x() == doctest::Approx(std::pow(4.0, 0.2)).epsilon(1e-12));
  CHECK(a.bec_frequency() > a.larmor_frequency());
  CHECK(a.larmor_frequency() ==
        doctest::Approx(0.5 * constants::bohr_magneton * 1e-5 / constants::hbar));
}

TEST_CASE("invalid inputs are rejected") {
  auto sp = AtomSpecies::rubidium87();
  TrapConfig t = reference_trap();
  t.omega_r = 0;
  CHECK_THROWS_AS(chemical_potential(sp, t), DomainError);
  t = reference_trap();
  t.atom_number = 0.5;
  CHECK_THROWS_AS(Condensate(sp, t), DomainError);
  sp.scattering_length = -1;
  CHECK_THROWS_AS(Condensate(sp, reference_trap()), DomainError);
}
