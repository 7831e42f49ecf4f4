#include <doctest.h>

#include <cmath>

#include "nwbec/coupling.hpp"
#include "nwbec/errors.hpp"

using namespace nwbec;
using constants::pi;

namespace {

TrapConfig reference_trap() { return {2 * pi * 500, 2 * pi * 200, 6e4, 1.143e-5}; }

NanowireModel reference_wire(Geometry g) {
  NanowireModel m;
  m.geometry = g;
  m.length = 2e-6;
  m.distance = 4.5e-6;
  m.current = 20e-6;
  m.omega_nw = 2 * pi * 8e4;
  m.effective_mass = 7e-22;
  m.kappa = m.omega_nw / 1e5;
  return m;
}

double rho_bar_closed(double x) { return x <= 0 || x >= 1 ? 0.0 : 3.75 * x * std::sqrt(1 - x); }

}  // namespace

TEST_CASE("coupling at the cloud centre") {
  const double gF = constants::rb87_lande_g;
  const auto dip = CouplingField::from_nanowire(reference_wire(Geometry::dipole), gF);
  CHECK(std::abs(dip(Vec3::Zero())) == doctest::Approx(1.06).epsilon(0.01));

  // long-wire closed form |g_F| mu_B mu0 I / (2 pi d^2) / (2 sqrt(hbar m omega))
  const auto w = reference_wire(Geometry::infinite);
  const auto inf = CouplingField::from_nanowire(w, gF);
  const double expect = 0.5 * constants::bohr_magneton * constants::vacuum_permeability *
                        w.current / (2 * pi * w.distance * w.distance) /
                        (2 * std::sqrt(constants::hbar * w.effective_mass * w.omega_nw));
  CHECK(std::abs(inf(Vec3::Zero())) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("eta is linear in the current") {
  auto w = reference_wire(Geometry::bent);
  const Vec3 r(0.5e-6, 0.3e-6, 1e-6);
  const auto e1 = CouplingField::from_nanowire(w, -0.5)(r);
  w.current *= 3;
  const auto e3 = CouplingField::from_nanowire(w, -0.5)(r);
  CHECK(std::abs(e3 - 3.0 * e1) <= 1e-12 * std::abs(e3));
}

TEST_CASE("closed-form density: normalisation, shape and moments") {
  Condensate c(AtomSpecies::rubidium87(), reference_trap());
  const double eta0 = 1.06;
  const auto rho = density_closed_form(c, eta0);
  const double W = c.band_width();
  CHECK(rho.total_weight() == doctest::Approx(6e4 * eta0 * eta0).epsilon(1e-14));
  CHECK(rho.integrate([](double) { return 1.0; }) == doctest::Approx(rho.total_weight()).epsilon(1e-10));
  CHECK(rho(-1.0) == 0.0);
  CHECK(rho(1.01 * W) == 0.0);
  CHECK(rho.sqrt_upper_edge());

  const DimensionlessDensity d(rho);
  for (double x : {0.1, 0.3, 2.0 / 3.0, 0.9, 0.999}) {
    CHECK(d(x) == doctest::Approx(rho_bar_closed(x)).epsilon(1e-12));
  }
  CHECK(d.x_max() == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
  CHECK(d.value_max() == doctest::Approx(2.5 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(d.integral() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d.mean() == doctest::Approx(4.0 / 7.0).epsilon(1e-10));
  CHECK(d.variance() == doctest::Approx(8.0 / 147.0).epsilon(1e-9));

  const auto fit = lorentzian_fit(rho);
  CHECK(fit.center == doctest::Approx(4.0 / 7.0 * W).epsilon(1e-10));
  CHECK(fit.half_width == doctest::Approx(std::sqrt(8.0 / 147.0) * W).epsilon(1e-9));
}

TEST_CASE("dimensionless density does not depend on the cloud") {
  Condensate a(AtomSpecies::rubidium87(), reference_trap());
  Condensate b(AtomSpecies::rubidium87(), {2 * pi * 90, 2 * pi * 35, 2e3, 1e-6});
  const DimensionlessDensity da(density_closed_form(a, 0.7));
  const DimensionlessDensity db(density_closed_form(b, 4.2));
  for (double x = 0.05; x < 1; x += 0.1) CHECK(da(x) == doctest::Approx(db(x)).epsilon(1e-12));
}

TEST_CASE("numerical density with constant eta reproduces the closed form") {
  Condensate c(AtomSpecies::rubidium87(), reference_trap());
  const double eta0 = 1.3;
  const auto num = density_numerical(c, CouplingField::constant(eta0));
  const auto ref = density_closed_form(c, eta0);
  const double W = c.band_width();
  const double peak = ref(2.0 / 3.0 * W);
  for (int k = 1; k < 40; ++k) {
    const double w = W * k / 40.0;
    CHECK(std::abs(num(w) - ref(w)) <= 1e-3 * peak);
  }
  CHECK(num.total_weight() == doctest::Approx(6e4 * eta0 * eta0).epsilon(1e-3));
  CHECK(num.kind() == CouplingDensity::Kind::numerical);
}

TEST_CASE("sum rule: int rho = Omega^2 for the spatially resolved coupling") {
  Condensate c(AtomSpecies::rubidium87(), reference_trap());
  const auto field = CouplingField::from_nanowire(reference_wire(Geometry::dipole), -0.5);
  const double omega = collective_coupling(c, field);
  const auto rho = density_numerical(c, field);
  CHECK(rho.integrate([](double) { return 1.0; }) == doctest::Approx(omega * omega).epsilon(1e-4));
  CHECK(rho.total_weight() == doctest::Approx(omega * omega).epsilon(1e-4));
  for (double w : rho.nodes()) CHECK(rho(w) >= 0.0);
}

TEST_CASE("collective coupling with constant eta is sqrt(N) eta") {
  Condensate c(AtomSpecies::rubidium87(), reference_trap());
  CHECK(collective_coupling(c, CouplingField::constant(2.0)) ==
        doctest::Approx(2.0 * std::sqrt(6e4)).epsilon(1e-6));
}

TEST_CASE("Lorentzian density") {
  const auto l = lorentzian_density(0.5, 0.01, 3.0, 1.0);
  CHECK(l.total_weight() == doctest::Approx(3.0));
  CHECK(l.integrate([](double) { return 1.0; }) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(l(0.5) > l(0.51));
  CHECK(l(0.51) == doctest::Approx(l(0.49)).epsilon(1e-12));
}

TEST_CASE("scaling a density") {
  Condensate c(AtomSpecies::rubidium87(), reference_trap());
  const auto rho = density_closed_form(c, 1.0);
  const auto two = rho.scaled(2.0);
  CHECK(two.total_weight() == doctest::Approx(2 * rho.total_weight()));
  CHECK(two(1e4) == doctest::Approx(2 * rho(1e4)));
  CHECK(rho.with_total_weight(5.0).total_weight() == doctest::Approx(5.0));
}
