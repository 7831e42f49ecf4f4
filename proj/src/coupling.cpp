#include "nwbec/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/minima.hpp>

#include "nwbec/constants.hpp"
#include "nwbec/errors.hpp"
#include "nwbec/parallel.hpp"
#include "nwbec/quadrature.hpp"

namespace nwbec {

namespace {

// Tensor Gauss-Legendre rule over the unit sphere: (unit vector, weight),
// weights summing to 4 pi.
struct SphereRule {
  std::vector<Vec3> dirs;
  std::vector<double> weights;
};

SphereRule sphere_rule(unsigned n) {
  const auto& gl = quad::gauss_legendre(n);
  SphereRule rule;
  rule.dirs.reserve(static_cast<std::size_t>(n) * n);
  rule.weights.reserve(static_cast<std::size_t>(n) * n);
  for (unsigned i = 0; i < n; ++i) {
    const double ct = gl.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (unsigned j = 0; j < n; ++j) {
      const double phi = constants::pi * (gl.nodes[j] + 1.0);
      rule.dirs.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
      rule.weights.push_back(gl.weights[i] * constants::pi * gl.weights[j]);
    }
  }
  return rule;
}

// Mean of |eta|^2 over the scaled shell of radius s.
double shell_mean(const Condensate& cloud, const CouplingField& field, double s,
                  const SphereRule& rule) {
  std::vector<double> terms(rule.dirs.size());
  for (std::size_t k = 0; k < rule.dirs.size(); ++k) {
    terms[k] = rule.weights[k] * std::norm(field(cloud.from_scaled(s, rule.dirs[k])));
  }
  return quad::pairwise_sum<double>(terms) / (4.0 * constants::pi);
}

class ClosedFormShape final : public CouplingDensity::Shape {
 public:
  ClosedFormShape(double amplitude, double width) : c_(amplitude), w_(width) {}
  double value(double omega) const override {
    const double x = omega / w_;
    return c_ * x * std::sqrt(1.0 - x);
  }
  double derivative(double omega) const override { return derivative(omega, w_ - omega); }
  double derivative(double omega, double gap) const override {
    const double x = omega / w_;
    const double r = std::sqrt(gap / w_);
    return c_ / w_ * (r - 0.5 * x / r);
  }

 private:
  double c_;  // 15 N eta0^2 / (4 W)
  double w_;  // W = mu / hbar
};

class ShellShape final : public CouplingDensity::Shape {
 public:
  ShellShape(double prefactor, double width, std::vector<double> omegas, std::vector<double> means)
      : c_(prefactor),
        w_(width),
        interp_(std::move(omegas), std::move(means)) {}

  double value(double omega) const override {
    const double s2 = std::max(0.0, 1.0 - omega / w_);
    const double s = std::sqrt(s2);
    return c_ * s * (1.0 - s2) * interp_(omega);
  }
  double derivative(double omega) const override { return derivative(omega, w_ - omega); }
  double derivative(double omega, double gap) const override {
    const double s2 = std::max(0.0, gap / w_);
    const double s = std::max(std::sqrt(s2), std::numeric_limits<double>::min());
    const double ds = -0.5 / (w_ * s);
    return c_ * ((1.0 - 3.0 * s2) * ds * interp_(omega) + s * (1.0 - s2) * interp_.prime(omega));
  }

 private:
  double c_;
  double w_;
  boost::math::interpolators::pchip<std::vector<double>> interp_;
};

class LorentzShape final : public CouplingDensity::Shape {
 public:
  LorentzShape(double center, double half_width, double amplitude)
      : w0_(center), g_(half_width), c_(amplitude) {}
  double value(double omega) const override {
    const double d = omega - w0_;
    return c_ / (d * d + g_ * g_);
  }
  double derivative(double omega) const override {
    const double d = omega - w0_;
    const double den = d * d + g_ * g_;
    return -2.0 * c_ * d / (den * den);
  }

 private:
  double w0_, g_, c_;
};

class FunctionShape final : public CouplingDensity::Shape {
 public:
  FunctionShape(std::function<double(double)> f, std::function<double(double)> df)
      : f_(std::move(f)), df_(std::move(df)) {}
  double value(double omega) const override { return f_(omega); }
  double derivative(double omega) const override { return df_(omega); }

 private:
  std::function<double(double)> f_, df_;
};

double band_prefactor(const Condensate& cloud) {
  const Vec3 R = cloud.tf_radii();
  return 2.0 * constants::pi * R.x() * R.y() * R.z() * constants::hbar / cloud.interaction();
}

}  // namespace

const char* to_string(GradientSource s) {
  return s == GradientSource::translation ? "translation" : "modal";
}

const char* to_string(CouplingDensity::Kind k) {
  switch (k) {
    case CouplingDensity::Kind::closed_form:
      return "closed_form";
    case CouplingDensity::Kind::numerical:
      return "numerical";
    case CouplingDensity::Kind::lorentzian:
      return "lorentzian";
    case CouplingDensity::Kind::custom:
      return "custom";
  }
  return "?";
}

std::complex<double> eta_from_gradient(const NanowireModel& wire, double lande_g,
                                       const TransverseGradient& grad) {
  const double pref = lande_g * constants::bohr_magneton /
                      (2.0 * std::sqrt(constants::hbar * wire.effective_mass * wire.omega_nw));
  return pref * std::complex<double>(grad.dBx, -grad.dBy);
}

CouplingField CouplingField::from_nanowire(const NanowireModel& wire, double lande_g,
                                           GradientSource source) {
  wire.validate();
  return CouplingField([wire, lande_g, source](const Vec3& r) {
    const TransverseGradient g =
        source == GradientSource::translation ? grad_y(wire, r) : modal_gradient(wire, r);
    return eta_from_gradient(wire, lande_g, g);
  });
}

CouplingField CouplingField::constant(std::complex<double> value) {
  return CouplingField([value](const Vec3&) { return value; });
}

double collective_coupling(const Condensate& cloud, const CouplingField& field,
                           const CloudQuadrature& q) {
  const Vec3 R = cloud.tf_radii();
  const double scale = R.x() * R.y() * R.z() * cloud.chemical_potential() / cloud.interaction();

  auto level = [&](unsigned n_rad, unsigned n_ang) {
    const auto& gl = quad::gauss_legendre(n_rad);
    const SphereRule sphere = sphere_rule(n_ang);
    std::vector<double> radial(n_rad);
    parallel_for(n_rad, [&](std::size_t i) {
      const double s = 0.5 * (gl.nodes[i] + 1.0);
      const double w = 0.5 * gl.weights[i];
      radial[i] = w * s * s * (1.0 - s * s) * 4.0 * constants::pi *
                  shell_mean(cloud, field, s, sphere);
    });
    return scale * quad::pairwise_sum<double>(radial);
  };

  unsigned n_rad = q.radial_nodes;
  unsigned n_ang = q.angular_nodes;
  double prev = level(n_rad, n_ang);
  while (2 * n_ang <= q.max_angular_nodes) {
    n_rad *= 2;
    n_ang *= 2;
    const double next = level(n_rad, n_ang);
    if (std::abs(next - prev) <= q.rel_tol * std::abs(next)) return std::sqrt(next);
    prev = next;
  }
  throw ConvergenceError("collective coupling: cloud quadrature did not converge",
                         "angular_nodes=" + std::to_string(n_ang) +
                             " last_value=" + std::to_string(prev));
}

CouplingDensity::CouplingDensity(Kind kind, std::shared_ptr<const Shape> shape, double lower,
                                 double upper, bool sqrt_upper_edge, double scale,
                                 double total_weight, std::vector<double> breakpoints,
                                 std::vector<double> nodes)
    : kind_(kind),
      shape_(std::move(shape)),
      lower_(lower),
      upper_(upper),
      sqrt_edge_(sqrt_upper_edge),
      scale_(scale),
      weight_(total_weight),
      breakpoints_(std::move(breakpoints)),
      nodes_(std::move(nodes)) {
  if (!(upper_ > lower_)) throw DomainError("coupling density: empty support");
  if (!(scale_ > 0.0)) throw DomainError("coupling density: scale must be positive");
}

double CouplingDensity::operator()(double omega) const {
  if (!(omega >= lower_ && omega <= upper_) || factor_ == 0.0) return 0.0;
  return factor_ * shape_->value(omega);
}

double CouplingDensity::derivative(double omega) const {
  if (!(omega >= lower_ && omega <= upper_) || factor_ == 0.0) return 0.0;
  return factor_ * shape_->derivative(omega);
}

double CouplingDensity::derivative(double omega, double gap) const {
  if (!(omega >= lower_ && omega <= upper_) || factor_ == 0.0) return 0.0;
  return factor_ * shape_->derivative(omega, gap);
}

CouplingDensity CouplingDensity::scaled(double factor) const {
  if (!(factor >= 0.0)) throw DomainError("coupling density: scale factor must be >= 0");
  CouplingDensity out = *this;
  out.factor_ *= factor;
  out.weight_ *= factor;
  return out;
}

CouplingDensity CouplingDensity::with_total_weight(double omega_sq) const {
  if (!(weight_ > 0.0)) throw DomainError("coupling density: cannot rescale a zero density");
  return scaled(omega_sq / weight_);
}

double CouplingDensity::to_omega(double var, double* jacobian) const {
  if (!sqrt_edge_) {
    if (jacobian) *jacobian = 1.0;
    return var;
  }
  const double width = upper_ - lower_;
  if (jacobian) *jacobian = 2.0 * width * var;  // |d omega / du|
  return upper_ - width * var * var;
}

double CouplingDensity::from_omega(double omega) const {
  if (!sqrt_edge_) return omega;
  return std::sqrt(std::clamp((upper_ - omega) / (upper_ - lower_), 0.0, 1.0));
}

std::vector<double> CouplingDensity::panel_points(std::span<const double> extra) const {
  std::vector<double> pts{from_omega(lower_), from_omega(upper_)};
  auto add = [&](double w) {
    if (w > lower_ && w < upper_) pts.push_back(from_omega(w));
  };
  for (double w : breakpoints_) add(w);
  for (double w : nodes_) add(w);  // the interpolant is only C1 across nodes
  for (double w : extra) add(w);
  std::sort(pts.begin(), pts.end());
  const double min_gap = 1e-14 * (pts.back() - pts.front());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [&](double l, double r) { return r - l <= min_gap; }),
            pts.end());
  return pts;
}

double CouplingDensity::integrate(const std::function<double(double)>& weight,
                                  double rel_tol) const {
  auto f = [&](double v) {
    double jac = 0.0;
    const double w = to_omega(v, &jac);
    return (*this)(w) * weight(w) * jac;
  };
  const auto pts = panel_points();
  quad::Options opt;
  opt.rel_tol = rel_tol;
  opt.max_intervals = 20000;
  return quad::integrate_checked<double>(f, std::span<const double>(pts), opt,
                                         "coupling density moment");
}

CouplingDensity density_closed_form(const Condensate& cloud, double eta0) {
  const double W = cloud.band_width();
  const double N = cloud.trap().atom_number;
  const double amp = 15.0 * N * eta0 * eta0 / (4.0 * W);
  return CouplingDensity(CouplingDensity::Kind::closed_form,
                         std::make_shared<ClosedFormShape>(amp, W), 0.0, W, true, W,
                         N * eta0 * eta0, {2.0 * W / 3.0});
}

CouplingDensity density_numerical(const Condensate& cloud, const CouplingField& field,
                                  const ShellQuadrature& q) {
  if (q.grid_nodes < 3) throw DomainError("density_numerical: need at least 3 grid nodes");
  const double W = cloud.band_width();
  const std::size_t n = q.grid_nodes;
  std::vector<double> omegas(n);
  for (std::size_t j = 0; j < n; ++j) omegas[j] = W * static_cast<double>(j) / (n - 1);
  omegas.back() = W;
  auto shell_radius = [&](double omega) { return std::sqrt(std::max(0.0, 1.0 - omega / W)); };

  // Pick the angular level on a subset of shells, then tabulate all of them.
  std::vector<std::size_t> probes;
  const std::size_t stride = std::max<unsigned>(1, q.check_stride);
  for (std::size_t j = 0; j < n; j += stride) probes.push_back(j);
  if (probes.back() != n - 1) probes.push_back(n - 1);

  unsigned level = q.angular_nodes;
  for (;;) {
    if (2 * level > q.max_angular_nodes) {
      throw ConvergenceError("density_numerical: shell quadrature did not converge",
                             "angular_nodes=" + std::to_string(level));
    }
    const SphereRule coarse = sphere_rule(level);
    const SphereRule fine = sphere_rule(2 * level);
    std::vector<double> diff(probes.size()), mag(probes.size());
    parallel_for(probes.size(), [&](std::size_t k) {
      const double s = shell_radius(omegas[probes[k]]);
      const double a = shell_mean(cloud, field, s, coarse);
      const double b = shell_mean(cloud, field, s, fine);
      diff[k] = std::abs(a - b);
      mag[k] = std::abs(b);
    });
    const double worst = *std::max_element(diff.begin(), diff.end());
    const double top = *std::max_element(mag.begin(), mag.end());
    if (worst <= q.rel_tol * top) break;
    level *= 2;
  }

  const SphereRule sphere = sphere_rule(level);
  std::vector<double> means(n);
  parallel_for(n, [&](std::size_t j) {
    means[j] = shell_mean(cloud, field, shell_radius(omegas[j]), sphere);
  });

  auto shape = std::make_shared<ShellShape>(band_prefactor(cloud), W, omegas, std::move(means));
  CouplingDensity draft(CouplingDensity::Kind::numerical, shape, 0.0, W, true, W, 1.0, {},
                        omegas);
  const double weight = draft.integrate([](double) { return 1.0; });
  return CouplingDensity(CouplingDensity::Kind::numerical, shape, 0.0, W, true, W, weight, {},
                         std::move(omegas));
}

CouplingDensity lorentzian_density(double omega0, double half_width, double omega_sq,
                                   double scale, double truncation) {
  if (!(half_width > 0.0) || !(truncation > 0.0) || !(omega_sq >= 0.0)) {
    throw DomainError("lorentzian_density: need half_width > 0, truncation > 0, weight >= 0");
  }
  const double amp = omega_sq * half_width / (2.0 * std::atan(truncation));
  std::vector<double> bp;
  for (double k : {-100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0}) {
    if (std::abs(k) < truncation) bp.push_back(omega0 + k * half_width);
  }
  return CouplingDensity(CouplingDensity::Kind::lorentzian,
                         std::make_shared<LorentzShape>(omega0, half_width, amp),
                         omega0 - truncation * half_width, omega0 + truncation * half_width,
                         false, scale, omega_sq, std::move(bp));
}

CouplingDensity density_from_function(std::function<double(double)> rho,
                                      std::function<double(double)> drho, double lower,
                                      double upper, bool sqrt_upper_edge, double scale,
                                      std::vector<double> breakpoints) {
  auto shape = std::make_shared<FunctionShape>(std::move(rho), std::move(drho));
  CouplingDensity draft(CouplingDensity::Kind::custom, shape, lower, upper, sqrt_upper_edge,
                        scale, 1.0, breakpoints);
  const double weight = draft.integrate([](double) { return 1.0; });
  return CouplingDensity(CouplingDensity::Kind::custom, shape, lower, upper, sqrt_upper_edge,
                         scale, weight, std::move(breakpoints));
}

DimensionlessDensity::DimensionlessDensity(CouplingDensity density)
    : density_(std::move(density)) {
  if (!(density_.total_weight() > 0.0)) {
    throw DomainError("dimensionless density: Omega^2 must be positive");
  }
  const double lo = lower();
  const double hi = upper();
  constexpr int kScan = 4096;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= kScan; ++i) {
    const double v = (*this)(lo + (hi - lo) * i / kScan);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + (hi - lo) * std::max(0, best - 1) / kScan;
  const double b = lo + (hi - lo) * std::min(kScan, best + 1) / kScan;
  auto neg = [this](double x) { return -(*this)(x); };
  const auto [xm, fm] = boost::math::tools::brent_find_minima(
      neg, a, b, std::numeric_limits<double>::digits / 2 + 4);
  if (-fm >= best_val) {
    x_max_ = xm;
    value_max_ = -fm;
  } else {
    x_max_ = lo + (hi - lo) * best / kScan;
    value_max_ = best_val;
  }
}

double DimensionlessDensity::operator()(double x) const {
  const double W = scale();
  return W / density_.total_weight() * density_(x * W);
}

double DimensionlessDensity::integral() const {
  return density_.integrate([](double) { return 1.0; }) / density_.total_weight();
}

double DimensionlessDensity::mean() const {
  const double W = scale();
  return density_.integrate([W](double w) { return w / W; }) / density_.total_weight();
}

double DimensionlessDensity::variance() const {
  const double W = scale();
  const double m = mean();
  return density_.integrate([W, m](double w) {
    const double d = w / W - m;
    return d * d;
  }) / density_.total_weight();
}

LorentzianFit lorentzian_fit(const CouplingDensity& density) {
  const double norm = density.integrate([](double) { return 1.0; });
  if (!(norm > 0.0)) throw DomainError("lorentzian_fit: density has zero weight");
  const double c = density.integrate([](double w) { return w; }) / norm;
  const double var = density.integrate([c](double w) { return (w - c) * (w - c); }) / norm;
  return {c, std::sqrt(var)};
}

}  // namespace nwbec
