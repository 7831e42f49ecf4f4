#include "nwbec/resolvent.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <vector>

#include "nwbec/constants.hpp"
#include "nwbec/diagnostics.hpp"
#include "nwbec/errors.hpp"
#include "nwbec/quadrature.hpp"

namespace nwbec {

namespace {

constexpr cplx I{0.0, 1.0};

// Exact distance to the upper edge at integration variable t.
double gap_of(const CouplingDensity& support, double t, double w) {
  return support.sqrt_upper_edge() ? (support.upper() - support.lower()) * t * t
                                   : support.upper() - w;
}

using EdgeFn = std::function<double(double, double)>;  // g(omega, upper - omega)

// Rough magnitude of int |g|, used for an absolute tolerance floor so that
// near-zero results (sign changes of Re K) still converge.
double magnitude_floor(const CouplingDensity& support, const EdgeFn& g) {
  const auto pts = support.panel_points();
  auto abs_g = [&](double t) {
    double jac = 0.0;
    const double w = support.to_omega(t, &jac);
    return std::abs(g(w, gap_of(support, t, w))) * jac;
  };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    acc += quad::gauss_kronrod_15<double>(abs_g, pts[i], pts[i + 1]).first;
  }
  return acc;
}

// `floor` is an absolute error allowance for the whole integral; negative
// means derive it from int |g|.
cplx transform_impl(const CouplingDensity& support, const EdgeFn& g, cplx zeta, bool subtract,
                    const ResolventOptions& opt, double floor = -1.0) {
  const double a = support.lower();
  const double b = support.upper();
  const double x = zeta.real();
  const double gx = subtract ? g(x, b - x) : 0.0;

  // Near the square-root edge w = b - (b - a) u^2 loses the resolution of u,
  // so x - w is formed in u to keep the subtracted quotient finite.
  const bool in_u = subtract && support.sqrt_upper_edge();
  const double ux = in_u ? support.from_omega(x) : 0.0;
  const cplx lift(0.0, zeta.imag());
  auto integrand = [&](double t) -> cplx {
    double jac = 0.0;
    const double w = support.to_omega(t, &jac);
    const cplx den = in_u ? lift + (b - a) * (t - ux) * (t + ux) : zeta - w;
    if (den == 0.0) return 0.0;
    return (g(w, gap_of(support, t, w)) - gx) * jac / den;
  };
  std::vector<double> extra;
  if (subtract) extra.push_back(x);
  const auto pts = support.panel_points(extra);

  quad::Options q;
  q.rel_tol = opt.rel_tol;
  q.max_intervals = opt.max_intervals;
  if (floor < 0.0) {
    const double reach = std::max(std::abs(zeta - 0.5 * (a + b)), b - a);
    floor = 1e-2 * opt.rel_tol * magnitude_floor(support, g) / reach;
  }
  q.abs_tol = floor;
  auto r = quad::integrate<cplx>(integrand, std::span<const double>(pts), q);
  if (!r.converged) {
    std::ostringstream os;
    os.precision(17);
    os << "zeta=(" << zeta.real() << ", " << zeta.imag() << ") " << quad::describe(r);
    throw ConvergenceError("level shift quadrature did not converge", os.str());
  }
  cplx v = r.value;
  if (subtract) v += gx * (std::log(zeta - a) - std::log(zeta - b));
  return v;
}

cplx boundary_impl(const CouplingDensity& support, const EdgeFn& g, double x,
                   const ResolventOptions& opt, double floor = -1.0) {
  const bool inside = x > support.lower() && x < support.upper();
  // A +0 imaginary part makes log(x - b) = ln(b - x) + i pi, so the log term
  // already carries the -i pi g(x) of the upper boundary value.
  return transform_impl(support, g, cplx(x, 0.0), inside, opt, floor);
}

cplx transform_any(const CouplingDensity& support, const EdgeFn& g, cplx zeta,
                   const ResolventOptions& opt, double floor = -1.0) {
  const double x = zeta.real();
  const bool inside = x > support.lower() && x < support.upper();
  if (inside && zeta.imag() == 0.0) {
    const cplx up = boundary_impl(support, g, x, opt, floor);
    return std::signbit(zeta.imag()) ? std::conj(up) : up;
  }
  return transform_impl(support, g, zeta, inside, opt, floor);
}

EdgeFn ignore_gap(const std::function<double(double)>& g) {
  return [&g](double w, double) { return g(w); };
}

}  // namespace

cplx cauchy_transform(const CouplingDensity& support, const std::function<double(double)>& g,
                      cplx zeta, const ResolventOptions& opt) {
  return transform_any(support, ignore_gap(g), zeta, opt);
}

cplx cauchy_boundary(const CouplingDensity& support, const std::function<double(double)>& g,
                     double x, const ResolventOptions& opt) {
  return boundary_impl(support, ignore_gap(g), x, opt);
}

LevelShift::LevelShift(CouplingDensity density, double gamma, ResolventOptions opt)
    : rho_(std::move(density)), gamma_(gamma), opt_(opt) {
  if (!(gamma_ >= 0.0) || !std::isfinite(gamma_)) {
    throw DomainError("level shift: gamma must be >= 0");
  }
  weight_ = magnitude_floor(rho_, [this](double w, double) { return rho_(w); });
}

double LevelShift::value_floor(cplx zeta) const {
  const double reach =
      std::max(std::abs(zeta - 0.5 * (rho_.lower() + rho_.upper())), rho_.upper() - rho_.lower());
  return 1e-2 * opt_.rel_tol * weight_ / reach;
}

// K' only enters through 1 + K', so its error is measured against 1.
double LevelShift::derivative_floor() const { return 1e-2 * opt_.rel_tol; }

void LevelShift::check_domain(cplx z) const {
  if (!(z.imag() > -gamma_)) {
    std::ostringstream os;
    os.precision(6);
    os << "level shift: Im z = " << z.imag() << " is not above the cut line Im z = " << -gamma_;
    throw DomainError(os.str());
  }
}

cplx LevelShift::boundary(double x) const {
  return boundary_impl(rho_, [this](double w, double) { return rho_(w); }, x, opt_,
                       value_floor(cplx(x, 0.0)));
}

cplx LevelShift::boundary_derivative(double x) const {
  const double a = rho_.lower();
  const double b = rho_.upper();
  cplx d = boundary_impl(rho_, [this](double w, double gap) { return rho_.derivative(w, gap); },
                         x, opt_, derivative_floor());
  const double ra = rho_(a);
  const double rb = rho_(b);
  if (ra != 0.0) d += ra / (x - a);
  if (rb != 0.0) d -= rb / (x - b);
  return d;
}

cplx LevelShift::evaluate(cplx zeta) const {
  const double x = zeta.real();
  const double y = zeta.imag();
  const bool inside = x > rho_.lower() && x < rho_.upper();
  if (inside && std::abs(y) < opt_.cut_width * scale()) {
    const cplx k = y >= 0.0 ? boundary(x) : std::conj(boundary(x));
    if (y == 0.0) return k;
    const cplx d = boundary_derivative(x);
    return k + I * y * (y > 0.0 ? d : std::conj(d));
  }
  return transform_any(rho_, [this](double w, double) { return rho_(w); }, zeta, opt_,
                       value_floor(zeta));
}

cplx LevelShift::evaluate_derivative(cplx zeta) const {
  const double x = zeta.real();
  const double y = zeta.imag();
  const double a = rho_.lower();
  const double b = rho_.upper();
  const bool inside = x > a && x < b;
  if (inside && std::abs(y) < opt_.cut_width * scale()) {
    const cplx d = boundary_derivative(x);
    return y >= 0.0 ? d : std::conj(d);
  }
  // Integration by parts moves the derivative onto rho.
  cplx d = transform_any(rho_, [this](double w, double gap) { return rho_.derivative(w, gap); },
                         zeta, opt_, derivative_floor());
  const double ra = rho_(a);
  const double rb = rho_(b);
  if (ra != 0.0) d += ra / (zeta - a);
  if (rb != 0.0) d -= rb / (zeta - b);
  return d;
}

cplx LevelShift::operator()(cplx z) const {
  check_domain(z);
  return evaluate(z + I * gamma_);
}

cplx LevelShift::derivative(cplx z) const {
  check_domain(z);
  return evaluate_derivative(z + I * gamma_);
}

cplx LevelShift::first_sheet(cplx z) const { return evaluate(z + I * gamma_); }

cplx LevelShift::first_sheet_derivative(cplx z) const {
  return evaluate_derivative(z + I * gamma_);
}

cplx LevelShift::on_axis(double omega) const {
  if (gamma_ > 1e-2 * scale()) {
    static std::once_flag once;
    std::call_once(once, [&] {
      warn("on-axis level shift neglects gamma, but gamma/scale = " +
           std::to_string(gamma_ / scale()));
    });
  }
  return boundary(omega);
}

cplx LevelShift::derivative_on_axis(double omega) const { return boundary_derivative(omega); }

double LevelShift::principal_value(double omega) const { return boundary(omega).real(); }

double LevelShift::branch_cut_jump(double omega) const {
  return -2.0 * std::numbers::pi * rho_(omega);
}

Propagator::Propagator(LevelShift level_shift, double detuning, double kappa)
    : ls_(std::move(level_shift)), delta_(detuning), kappa_(kappa) {
  if (!(kappa_ >= 0.0) || !std::isfinite(kappa_)) throw DomainError("propagator: kappa must be >= 0");
  if (!std::isfinite(delta_)) throw DomainError("propagator: detuning must be finite");
}

cplx Propagator::characteristic(cplx z) const {
  return z - delta_ + I * kappa_ + ls_.first_sheet(z);
}

cplx Propagator::characteristic_derivative(cplx z) const {
  return 1.0 + ls_.first_sheet_derivative(z);
}

cplx Propagator::operator()(cplx z) const {
  const cplx f = z - delta_ + I * kappa_ + ls_(z);
  if (std::abs(f) < 1e-12 * scale()) {
    std::ostringstream os;
    os << "forward propagator evaluated within 1e-12 of a pole at z = (" << z.real() << ", "
       << z.imag() << ")";
    warn(os.str());
  }
  return 1.0 / f;
}

}  // namespace nwbec
