#include "nwbec/spectral_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "nwbec/constants.hpp"
#include "nwbec/errors.hpp"
#include "nwbec/parallel.hpp"
#include "nwbec/quadrature.hpp"

namespace nwbec {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr int kBrentBits = std::numeric_limits<double>::digits / 2 + 4;

std::string format_z(cplx z) {
  std::ostringstream os;
  os.precision(10);
  os << "(" << z.real() << ", " << z.imag() << ")";
  return os.str();
}

// Newton iteration on f(z) / prod (z - r_j). Steps that would cross the cut
// line inside the support are shortened so that Im z + gamma loses at most
// 90% per iteration; from very close above, the point lands on the line
// (boundary value from above) and only moves along it.
struct Newton {
  const Propagator& p;
  SearchRect box;
  const PoleSearchOptions& opt;

  std::optional<cplx> run(cplx z, const std::vector<cplx>& deflate) const {
    const double W = p.scale();
    const double gamma = p.level_shift().gamma();
    const double a = p.level_shift().density().lower();
    const double b = p.level_shift().density().upper();
    for (int it = 0; it < opt.max_iterations; ++it) {
      const cplx f = p.characteristic(z);
      if (f == 0.0) return z;
      const cplx df = p.characteristic_derivative(z);
      cplx denom = df / f;
      for (const cplx& r : deflate) denom -= 1.0 / (z - r);
      if (!std::isfinite(denom.real()) || !std::isfinite(denom.imag()) || denom == 0.0) {
        return std::nullopt;
      }
      cplx next = z - 1.0 / denom;
      const double y = z.imag() + gamma;
      double y_next = next.imag() + gamma;
      if (next.real() > a && next.real() < b) {
        if (y >= 0.0 && y_next < 0.0) {
          y_next = y < 1e-12 * W ? 0.0 : 0.1 * y;
        } else if (y < 0.0 && y_next >= 0.0) {
          y_next = 0.1 * y;
        }
        next = cplx(next.real(), y_next - gamma);
      }
      if (!box.contains(next)) return std::nullopt;
      const double step = std::abs(next - z);
      z = next;
      if (step <= 1e-14 * (W + std::abs(z))) return z;
    }
    return std::nullopt;
  }
};

SearchRect expanded(const SearchRect& r, double fraction) {
  const double dx = fraction * (r.re_max - r.re_min);
  const double dy = fraction * (r.im_max - r.im_min);
  return {r.re_min - dx, r.re_max + dx, r.im_min - dy, r.im_max + dy};
}

// Local minima of |f| along a horizontal line, as Newton starts.
void axis_seeds(const Propagator& p, double y, double x0, double x1, unsigned n,
                std::vector<cplx>& seeds) {
  if (n < 3) return;
  std::vector<double> mag(n);
  std::vector<double> xs(n);
  for (unsigned k = 0; k < n; ++k) {
    xs[k] = x0 + (x1 - x0) * (k + 0.5) / n;
    mag[k] = std::abs(p.characteristic(cplx(xs[k], y)));
  }
  for (unsigned k = 0; k < n; ++k) {
    const bool left = k == 0 || mag[k] <= mag[k - 1];
    const bool right = k + 1 == n || mag[k] <= mag[k + 1];
    if (left && right) seeds.emplace_back(xs[k], y);
  }
}

}  // namespace

SearchRect default_search_rect(const Propagator& p) {
  const double W = p.scale();
  SearchRect r{-0.2 * W, 1.2 * W, 0.0, 0.5 * W};
  const double margin = 0.2 * W;
  r.re_min = std::min(r.re_min, p.detuning() - margin);
  r.re_max = std::max(r.re_max, p.detuning() + margin);
  return r;
}

std::optional<Pole> polish_pole(const Propagator& p, cplx start, const PoleSearchOptions& opt) {
  const double W = p.scale();
  const SearchRect box{start.real() - 10.0 * W, start.real() + 10.0 * W,
                       start.imag() - 10.0 * W, start.imag() + 10.0 * W};
  Newton newton{p, box, opt};
  auto z = newton.run(start, {});
  if (!z) return std::nullopt;
  const double residual = std::abs(p.characteristic(*z));
  if (!(residual < opt.residual_tol * W)) return std::nullopt;
  return Pole{*z, 1.0 / p.characteristic_derivative(*z), residual};
}

PoleSet find_poles(const Propagator& p, const SearchRect& rect, const PoleSearchOptions& opt) {
  if (!(rect.re_max > rect.re_min) || !(rect.im_max > rect.im_min)) {
    throw DomainError("find_poles: empty search rectangle");
  }
  const double W = p.scale();
  const double gamma = p.level_shift().gamma();
  PoleSet out;
  out.rect = rect;

  std::vector<cplx> seeds;
  const double dy = 1e-3 * (rect.im_max - rect.im_min);
  const double above = std::max(rect.im_min, -gamma) + dy;
  if (above < rect.im_max) {
    axis_seeds(p, above, rect.re_min, rect.re_max, opt.axis_samples, seeds);
    if (p.detuning() >= rect.re_min && p.detuning() <= rect.re_max) {
      seeds.emplace_back(p.detuning(), above);
    }
  }
  if (rect.im_min < -gamma) {
    const double below = -gamma - dy;
    axis_seeds(p, below, rect.re_min, rect.re_max, opt.axis_samples, seeds);
    const cplx bare(p.detuning(), -p.kappa());
    if (rect.contains(bare)) seeds.push_back(bare);
  }
  for (unsigned i = 0; i < opt.grid; ++i) {
    for (unsigned j = 0; j < opt.grid; ++j) {
      seeds.emplace_back(rect.re_min + (rect.re_max - rect.re_min) * (i + 0.5) / opt.grid,
                         rect.im_min + (rect.im_max - rect.im_min) * (j + 0.5) / opt.grid);
    }
  }

  Newton newton{p, expanded(rect, 0.5), opt};
  std::vector<cplx> roots;  // every distinct root met, used for deflation
  for (const cplx& s : seeds) {
    ++out.starts;
    std::optional<cplx> z;
    try {
      z = newton.run(s, roots);
      if (z) z = newton.run(*z, {});  // polish without deflation
    } catch (const Error& e) {
      out.diagnostics.push_back("start " + format_z(s) + ": " + e.what());
      continue;
    }
    if (!z) continue;
    const double residual = std::abs(p.characteristic(*z));
    if (!(residual < opt.residual_tol * W)) continue;
    ++out.converged_starts;
    const bool seen = std::any_of(roots.begin(), roots.end(), [&](cplx r) {
      return std::abs(r - *z) <= opt.merge_tol * W;
    });
    if (seen) continue;
    roots.push_back(*z);
    if (rect.contains(*z)) {
      out.poles.push_back({*z, 1.0 / p.characteristic_derivative(*z), residual});
    }
  }

  const double delta = p.detuning();
  std::sort(out.poles.begin(), out.poles.end(), [&](const Pole& l, const Pole& r) {
    if (l.z.imag() != r.z.imag()) return l.z.imag() > r.z.imag();
    const double dl = std::abs(l.z.real() - delta);
    const double dr = std::abs(r.z.real() - delta);
    if (dl != dr) return dl < dr;
    return l.z.real() < r.z.real();
  });
  return out;
}

double threshold_omega(const DimensionlessDensity& density, double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("threshold_omega: kappa must be >= 0");
  return std::sqrt(kappa * density.scale() / (constants::pi * density.value_max()));
}

namespace {

// P int rho_bar(y) / (x - y) dy.
double normalised_pv(const DimensionlessDensity& density, double x, const ResolventOptions& opt) {
  const double W = density.scale();
  // With int rho = W, rho(w) = rho_bar(w / W) and the PV in omega equals
  // the dimensionless one.
  LevelShift ls(density.density().with_total_weight(W), 0.0, opt);
  return ls.principal_value(x * W);
}

}  // namespace

double threshold_detuning(const DimensionlessDensity& density, double omega_th,
                          const ResolventOptions& opt) {
  const double W = density.scale();
  const double x = density.x_max();
  return W * x + omega_th * omega_th / W * normalised_pv(density, x, opt);
}

ThresholdReport threshold_report(const DimensionlessDensity& density, double kappa,
                                 const ResolventOptions& opt) {
  ThresholdReport r;
  r.rho_max = density.value_max();
  r.x_max = density.x_max();
  r.pv = normalised_pv(density, r.x_max, opt);
  r.omega_coefficient = 1.0 / (constants::pi * r.rho_max);
  r.delta_coefficient = r.pv * r.omega_coefficient;
  r.omega_th = threshold_omega(density, kappa);
  r.delta_th = density.scale() * r.x_max + r.omega_th * r.omega_th / density.scale() * r.pv;
  return r;
}

ExactThreshold threshold_exact(const CouplingDensity& shape, double gamma, double kappa,
                               const ExactThresholdOptions& opt) {
  if (!(kappa > 0.0)) throw DomainError("threshold_exact: kappa must be > 0");
  if (!(shape.total_weight() > 0.0)) throw DomainError("threshold_exact: density has zero weight");
  const LevelShift ls(shape.with_total_weight(1.0), gamma, opt.resolvent);
  const double a = shape.lower();
  const double b = shape.upper();
  auto loss = [&](double w) { return -ls.first_sheet(cplx(w, 0.0)).imag(); };

  const unsigned n = std::max(3u, opt.scan);
  unsigned best = 0;
  double best_val = -1.0;
  for (unsigned k = 0; k < n; ++k) {
    const double w = a + (b - a) * (k + 0.5) / n;
    const double v = loss(w);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  const double lo = a + (b - a) * (best > 0 ? best - 0.5 : 0.0) / n;
  const double hi = a + (b - a) * std::min<double>(n, best + 1.5) / n;
  auto [w_star, neg] = boost::math::tools::brent_find_minima(
      [&](double w) { return -loss(w); }, lo, hi, kBrentBits);
  double s = -neg;
  if (s < best_val) {
    w_star = a + (b - a) * (best + 0.5) / n;
    s = best_val;
  }
  if (!(s > 0.0)) throw ConvergenceError("threshold_exact: no loss channel in the support", "");

  ExactThreshold r;
  r.omega_th = std::sqrt(kappa / s);
  if (opt.omega_max > 0.0 && r.omega_th > opt.omega_max) {
    std::ostringstream os;
    os << "omega_th=" << r.omega_th << " omega_max=" << opt.omega_max;
    throw ConvergenceError("threshold_exact: threshold outside the scan range", os.str());
  }
  r.frequency = w_star;
  r.delta_th = w_star + r.omega_th * r.omega_th * ls.first_sheet(cplx(w_star, 0.0)).real();
  return r;
}

namespace {

// -min |f(w)| / |f'(w)| for w in [x0, x1].
double stability_margin(const Propagator& p, double x0, double x1, int samples) {
  auto margin = [&](double w) {
    const cplx z(w, 0.0);
    return std::abs(p.characteristic(z)) / std::abs(p.characteristic_derivative(z));
  };
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= samples; ++k) {
    const double v = margin(x0 + (x1 - x0) * k / samples);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  const double lo = x0 + (x1 - x0) * std::max(0, best - 1) / samples;
  const double hi = x0 + (x1 - x0) * std::min(samples, best + 1) / samples;
  const auto found = boost::math::tools::brent_find_minima(margin, lo, hi, kBrentBits);
  return -std::min(best_val, found.second);
}

// sup |K+| over the cut for the unit-weight shape, with a 10% allowance for
// a missed maximum; infinite when the density does not vanish at both edges
// (log divergence). K is analytic above the cut and vanishes at infinity,
// so |K(z)| never exceeds this bound there.
double level_shift_bound(const CouplingDensity& shape, double gamma, const ResolventOptions& opt) {
  const double a = shape.lower();
  const double b = shape.upper();
  if (shape(a) != 0.0 || shape(b) != 0.0) return std::numeric_limits<double>::infinity();
  const LevelShift ls(shape.with_total_weight(1.0), gamma, opt);
  auto mag = [&](double w) { return std::abs(ls.first_sheet(cplx(w, -gamma))); };
  constexpr int kScan = 512;
  int best = 0;
  double best_val = 0.0;
  for (int k = 0; k <= kScan; ++k) {
    const double v = mag(a + (b - a) * k / kScan);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  const double lo = a + (b - a) * std::max(0, best - 1) / kScan;
  const double hi = a + (b - a) * std::min(kScan, best + 1) / kScan;
  const auto found = boost::math::tools::brent_find_minima(
      [&](double w) { return -mag(w); }, lo, hi, kBrentBits);
  return 1.1 * std::max(best_val, -found.second);
}

}  // namespace

double growth_rate(const Propagator& p, const SearchRect& rect) {
  const PoleSet poles = find_poles(p, rect);
  if (!poles.empty()) return poles.dominant()->z.imag();

  const double W = p.scale();
  const auto& rho = p.level_shift().density();
  const double x0 = std::min(rho.lower(), p.detuning()) - 0.25 * W;
  const double x1 = std::max(rho.upper(), p.detuning()) + 0.25 * W;
  return stability_margin(p, x0, x1, 256);
}

GainMap gain_map(const CouplingDensity& shape, double gamma, double kappa,
                 const std::vector<double>& omegas, const std::vector<double>& deltas,
                 const ResolventOptions& opt) {
  GainMap map;
  map.omegas = omegas;
  map.deltas = deltas;
  const std::size_t nd = deltas.size();
  const std::size_t cells = omegas.size() * nd;
  map.gain.assign(cells, std::numeric_limits<double>::quiet_NaN());
  map.cell_errors.assign(cells, std::string());
  const bool has_weight = shape.total_weight() > 0.0;
  const double bound = has_weight ? level_shift_bound(shape, gamma, opt)
                                  : std::numeric_limits<double>::infinity();
  parallel_for(cells, [&](std::size_t c) {
    const double omega = omegas[c / nd];
    const double delta = deltas[c % nd];
    try {
      if (!std::isfinite(omega) || !std::isfinite(delta)) throw DomainError("non-finite grid value");
      const CouplingDensity rho =
          omega == 0.0 || !has_weight ? shape.scaled(0.0) : shape.with_total_weight(omega * omega);
      const Propagator p(LevelShift(rho, gamma, opt), delta, kappa);
      const double reach = omega * omega * bound;  // |K| above the cut
      if (!std::isfinite(reach)) {
        map.gain[c] = growth_rate(p);
        return;
      }
      // A root has |z - Delta + i kappa| = |K(z)| <= reach.
      const SearchRect full = default_search_rect(p);
      const SearchRect near{std::max(full.re_min, delta - reach), std::min(full.re_max, delta + reach),
                            full.im_min, std::min(full.im_max, reach - kappa)};
      if (near.im_max > near.im_min && near.re_max > near.re_min) {
        // The box is at most a few kappa wide; a light seeding suffices.
        const PoleSet poles = find_poles(p, near, PoleSearchOptions{4, 32});
        if (!poles.empty()) {
          map.gain[c] = poles.dominant()->z.imag();
          return;
        }
      }
      // Away from [Delta - reach, Delta + reach], |f| >= |w - Delta| - reach.
      const double half = reach + kappa + 1e-6 * p.scale();
      map.gain[c] = stability_margin(p, delta - half, delta + half, 32);
    } catch (const std::exception& e) {
      map.cell_errors[c] = e.what();
    }
  });
  return map;
}

double fit_growth_rate(const std::vector<double>& times, const std::vector<cplx>& values) {
  const std::size_t n = std::min(times.size(), values.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t start = std::min(n - 2, (2 * n) / 3);
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t m = 0;
  for (std::size_t k = start; k < n; ++k) {
    const double a = std::abs(values[k]);
    if (!(a > 0.0)) continue;
    const double y = std::log(a);
    st += times[k];
    sy += y;
    stt += times[k] * times[k];
    sty += times[k] * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = m * stt - st * st;
  return (m * sty - st * sy) / den;
}

namespace {

// Number of zeros of the characteristic function on the first sheet:
// 1 + (winding of f+ along the cut from lower to upper minus that of f-) / 2 pi.
int count_poles(const Propagator& p, const std::function<cplx(double)>& k_plus) {
  const auto& rho = p.level_shift().density();
  const double gamma = p.level_shift().gamma();
  auto fpm = [&](double w, cplx& fp, cplx& fm) {
    const cplx k = k_plus(w);
    const cplx base = w - I * gamma - p.detuning() + I * p.kappa();
    fp = base + k;
    fm = base + std::conj(k);
  };
  // Samples in the integration variable resolve the square-root edge.
  constexpr int kSamples = 512;
  std::vector<double> ws;
  for (int k = 0; k <= kSamples; ++k) {
    const double v0 = rho.from_omega(rho.lower());
    const double v1 = rho.from_omega(rho.upper());
    const double t = 1e-9 + (1.0 - 2e-9) * k / kSamples;
    ws.push_back(rho.to_omega(v0 + (v1 - v0) * t));
  }
  std::sort(ws.begin(), ws.end());

  double winding = 0.0;
  std::function<void(double, cplx, cplx, double, cplx, cplx, int)> segment =
      [&](double wl, cplx pl, cplx ml, double wr, cplx pr, cplx mr, int depth) {
        const double dp = std::arg(pr / pl);
        const double dm = std::arg(mr / ml);
        if ((std::abs(dp) > 0.3 || std::abs(dm) > 0.3) && depth < 40) {
          const double wm = 0.5 * (wl + wr);
          cplx pm, mm;
          fpm(wm, pm, mm);
          segment(wl, pl, ml, wm, pm, mm, depth + 1);
          segment(wm, pm, mm, wr, pr, mr, depth + 1);
          return;
        }
        winding += dp - dm;
      };
  cplx pl, ml;
  fpm(ws.front(), pl, ml);
  for (std::size_t k = 1; k < ws.size(); ++k) {
    cplx pr, mr;
    fpm(ws[k], pr, mr);
    segment(ws[k - 1], pl, ml, ws[k], pr, mr, 0);
    pl = pr;
    ml = mr;
  }
  return 1 + static_cast<int>(std::lround(winding / (2.0 * constants::pi)));
}

}  // namespace

PropagatorTrace propagator_time(const Propagator& p, const std::vector<double>& times,
                                const TimeOptions& opt) {
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("propagator_time: times must be >= 0");
  }
  PropagatorTrace out;
  out.times = times;
  const auto& ls = p.level_shift();
  const auto& rho = ls.density();
  const double W = p.scale();
  const double gamma = ls.gamma();
  const double weight = rho.total_weight();

  if (!(weight > 0.0)) {
    const cplx z(p.detuning(), -p.kappa());
    out.poles.poles.push_back({z, 1.0, 0.0});
    out.expected_poles = 1;
    for (double t : times) out.values.push_back(std::exp(-I * z * t));
    out.initial_value = 1.0;
    out.growth_rate = fit_growth_rate(out.times, out.values);
    return out;
  }

  // Boundary values from above on the cut, cached by frequency.
  std::map<double, cplx> cache;
  auto k_plus = [&](double w) {
    auto it = cache.find(w);
    if (it != cache.end()) return it->second;
    const cplx k = ls.first_sheet(cplx(w, -gamma));
    cache.emplace(w, k);
    return k;
  };

  // Poles lie within Omega of the cut or of the bare pole Delta - i kappa.
  const double reach = 1.1 * std::sqrt(weight) + 0.05 * W;
  SearchRect rect;
  rect.re_min = std::min(rho.lower(), p.detuning()) - reach;
  rect.re_max = std::max(rho.upper(), p.detuning()) + reach;
  rect.im_min = std::min(-gamma, -p.kappa()) - reach;
  rect.im_max = std::max(-gamma, -p.kappa()) + reach;
  out.poles = find_poles(p, rect, opt.poles);
  out.expected_poles = count_poles(p, k_plus);
  if (static_cast<int>(out.poles.poles.size()) != out.expected_poles) {
    out.diagnostics.push_back("found " + std::to_string(out.poles.poles.size()) +
                              " poles, argument principle expects " +
                              std::to_string(out.expected_poles));
  }

  std::vector<double> extra;
  for (const Pole& pole : out.poles.poles) {
    const double x = pole.z.real();
    if (!(x > rho.lower() && x < rho.upper())) continue;
    const double height = std::abs(pole.z.imag() + gamma);
    if (height < 1e-10 * W) {
      throw DomainError("propagator_time: pole " + format_z(pole.z) +
                        " lies on the cut; G(t) is not defined by the pole/cut split there");
    }
    if (height < 0.05 * W) extra.push_back(x);
  }
  const auto pts = rho.panel_points(extra);
  const cplx base_shift = -I * gamma - p.detuning() + I * p.kappa();

  auto sample = [&](double t) {
    cplx g = 0.0;
    for (const Pole& pole : out.poles.poles) g += pole.residue * std::exp(-I * pole.z * t);
    auto integrand = [&](double v) -> cplx {
      double jac = 0.0;
      const double w = rho.to_omega(v, &jac);
      const double r = rho(w);
      if (r == 0.0) return 0.0;
      const cplx k = k_plus(w);
      const cplx fp = w + base_shift + k;
      const cplx fm = w + base_shift + std::conj(k);
      return r * jac * std::exp(-I * w * t) / (fp * fm);
    };
    quad::Options q;
    q.rel_tol = opt.rel_tol;
    q.abs_tol = opt.abs_tol;
    q.max_intervals = 20000;
    const cplx cut = quad::integrate_checked<cplx>(integrand, std::span<const double>(pts), q,
                                                   "propagator cut integral");
    return g - std::exp(-gamma * t) * cut;
  };

  out.initial_value = sample(0.0);
  if (std::abs(out.initial_value - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "G(0+) = " << format_z(out.initial_value) << " deviates from 1";
    out.diagnostics.push_back(os.str());
  }
  out.values.reserve(times.size());
  for (double t : times) out.values.push_back(sample(t));
  out.growth_rate = fit_growth_rate(out.times, out.values);
  return out;
}

}  // namespace nwbec
