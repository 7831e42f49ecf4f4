#include <doctest.h>

#include <cmath>

#include "nwbec/constants.hpp"
#include "nwbec/errors.hpp"
#include "nwbec/nanowire_field.hpp"

using namespace nwbec;
using constants::pi;

namespace {

NanowireModel reference_wire(Geometry g) {
  NanowireModel m;
  m.geometry = g;
  m.length = 2e-6;
  m.distance = 4.5e-6;
  m.current = 20e-6;
  m.omega_nw = 2 * pi * 8e4;
  m.effective_mass = 7e-22;
  m.kappa = NanowireModel::kappa_from_quality(m.omega_nw, 1e5);
  return m;
}

TransverseGradient fd_grad_y(const NanowireModel& m, const Vec3& r, double h) {
  const Vec3 e(0, h, 0);
  const Vec3 d = (field(m, r + e) - field(m, r - e)) / (2 * h);
  return {d.x(), d.y()};
}

}  // namespace

TEST_CASE("field magnitude at the cloud centre") {
  const auto dip = reference_wire(Geometry::dipole);
  const auto inf = reference_wire(Geometry::infinite);
  CHECK(field(dip, Vec3::Zero()).norm() == doctest::Approx(1.975e-7).epsilon(2e-3));
  CHECK(field(inf, Vec3::Zero()).norm() == doctest::Approx(8.889e-7).epsilon(2e-3));
  // exact closed forms
  const double mu0 = constants::vacuum_permeability;
  CHECK(field(dip, Vec3::Zero()).norm() ==
        doctest::Approx(mu0 * 20e-6 * 2e-6 / (4 * pi * 4.5e-6 * 4.5e-6)).epsilon(1e-14));
  CHECK(field(inf, Vec3::Zero()).norm() ==
        doctest::Approx(mu0 * 20e-6 / (2 * pi * 4.5e-6)).epsilon(1e-14));
}

TEST_CASE("field lies in the transverse plane and reverses with the current") {
  for (Geometry g : {Geometry::dipole, Geometry::infinite, Geometry::bent}) {
    auto m = reference_wire(g);
    const Vec3 r(0.7e-6, -1.1e-6, 0.4e-6);
    const Vec3 b = field(m, r);
    if (g != Geometry::dipole) {
      CHECK(std::abs(b.z()) <= 1e-12 * b.norm());
    }
    CHECK(b.dot(Vec3(0, 0, 1)) == doctest::Approx(0.0).epsilon(1e-12 * b.norm()));
    m.current = -m.current;
    const Vec3 rev = field(m, r);
    CHECK((rev + b).norm() <= 1e-13 * b.norm());
  }
}

TEST_CASE("bent filament reduces to the dipole and infinite limits") {
  auto m = reference_wire(Geometry::bent);
  auto d = reference_wire(Geometry::dipole);
  m.length = d.length = 1e-3 * m.distance;
  const Vec3 r(0.3e-6, 0.2e-6, -0.1e-6);
  CHECK((field(m, r) - field(d, r)).norm() <= 1e-3 * field(d, r).norm());

  auto inf = reference_wire(Geometry::infinite);
  m.length = 1e3 * m.distance;
  CHECK((field(m, r) - field(inf, r)).norm() <= 1e-2 * field(inf, r).norm());
}

TEST_CASE("analytic transverse gradient agrees with finite differences") {
  const Vec3 pts[] = {Vec3::Zero(), Vec3(1e-6, 0.5e-6, -2e-6), Vec3(-0.4e-6, -1.5e-6, 3e-6)};
  for (Geometry g : {Geometry::dipole, Geometry::infinite, Geometry::bent}) {
    const auto m = reference_wire(g);
    for (const Vec3& r : pts) {
      const auto a = grad_y(m, r);
      const auto f = fd_grad_y(m, r, 1e-9);
      const double scale = std::hypot(a.dBx, a.dBy);
      CHECK(std::abs(a.dBx - f.dBx) <= 1e-6 * scale);
      CHECK(std::abs(a.dBy - f.dBy) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("infinite wire gradient at the origin") {
  const auto m = reference_wire(Geometry::infinite);
  const auto g = grad_y(m, Vec3::Zero());
  const double mu0 = constants::vacuum_permeability;
  // with the wire at -d and I along +z, B_x = -mu0 I / (2 pi (d + y)) on the y axis
  CHECK(g.dBx == doctest::Approx(mu0 * 20e-6 / (2 * pi * 4.5e-6 * 4.5e-6)).epsilon(1e-12));
  CHECK(g.dBy == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("modal gradient matches a finite difference in the bend amplitude") {
  auto m = reference_wire(Geometry::bent);
  for (double q0 : {0.0, 0.3e-6}) {
    m.bend_amplitude = q0;
    const Vec3 r(0.2e-6, -0.4e-6, 0.5e-6);
    const double h = 1e-10;
    const Vec3 fd = -(field_bent(m, r, q0 + h) - field_bent(m, r, q0 - h)) / (2 * h);
    const auto a = modal_gradient(m, r);
    const double scale = std::hypot(a.dBx, a.dBy);
    CHECK(std::abs(a.dBx - fd.x()) <= 1e-6 * scale);
    CHECK(std::abs(a.dBy - fd.y()) <= 1e-6 * scale);
  }
}

TEST_CASE("field is divergence free") {
  const double h = 1e-9;
  for (Geometry g : {Geometry::dipole, Geometry::infinite, Geometry::bent}) {
    const auto m = reference_wire(g);
    const Vec3 r(0.6e-6, 0.9e-6, -0.7e-6);
    double div = 0;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = h;
      div += (field(m, r + e)[k] - field(m, r - e)[k]) / (2 * h);
    }
    const auto gy = grad_y(m, r);
    CHECK(std::abs(div) <= 1e-5 * std::hypot(gy.dBx, gy.dBy));
  }
}

TEST_CASE("distance scaling of the gradient") {
  auto dip = reference_wire(Geometry::dipole);
  auto inf = reference_wire(Geometry::infinite);
  const double g1 = std::abs(grad_y(dip, Vec3::Zero()).dBx);
  const double i1 = std::abs(grad_y(inf, Vec3::Zero()).dBx);
  dip.distance *= 2;
  inf.distance *= 2;
  CHECK(std::abs(grad_y(dip, Vec3::Zero()).dBx) == doctest::Approx(g1 / 8).epsilon(1e-12));
  CHECK(std::abs(grad_y(inf, Vec3::Zero()).dBx) == doctest::Approx(i1 / 4).epsilon(1e-12));
}

TEST_CASE("zero-point amplitude and kappa") {
  const auto m = reference_wire(Geometry::dipole);
  CHECK(m.zero_point_amplitude() ==
        doctest::Approx(std::sqrt(constants::hbar / (2 * 7e-22 * 2 * pi * 8e4))));
  CHECK(m.kappa == doctest::Approx(2 * pi * 8e4 / 1e5));
}

TEST_CASE("evaluation on the filament and invalid models are rejected") {
  for (Geometry g : {Geometry::dipole, Geometry::infinite, Geometry::bent}) {
    const auto m = reference_wire(g);
    CHECK_THROWS_AS(field(m, Vec3(0, -4.5e-6, 0)), SingularityError);
  }
  auto m = reference_wire(Geometry::dipole);
  m.distance = 0;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = reference_wire(Geometry::bent);
  m.length = -1;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = reference_wire(Geometry::infinite);
  m.current = 0;
  CHECK_THROWS_AS(m.validate(), DomainError);
  CHECK(geometry_from_string("bent") == Geometry::bent);
  CHECK_FALSE(geometry_from_string("coil").has_value());
}
