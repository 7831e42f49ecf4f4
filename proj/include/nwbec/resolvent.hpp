#pragma once

// Level-shift function K(z) = int rho(w) / (z - w + i gamma) dw and the
// forward propagator G+(z) = 1 / (z - Delta + i kappa + K(z)).
//
// K is analytic everywhere except on the segment [lower, upper] - i gamma
// (the cut). Approaching the cut from above gives
//   K+(w) = P int rho(w') / (w - w') dw' - i pi rho(w),
// from below the sign of the imaginary part flips.

#include <complex>

#include "nwbec/coupling.hpp"

namespace nwbec {

using cplx = std::complex<double>;

struct ResolventOptions {
  double rel_tol = 1e-10;
  /// Below |Im z + gamma| < cut_width * scale the evaluation switches to the
  /// boundary value plus a first-order correction.
  double cut_width = 1e-6;
  int max_intervals = 20000;
};

/// C[g](zeta) = int_lower^upper g(w) / (zeta - w) dw for a density-like g,
/// with the integration variable and breakpoints of `support`.
/// Interior points are handled by subtracting g(Re zeta) and adding the
/// analytic log term, so the remaining integrand is bounded.
cplx cauchy_transform(const CouplingDensity& support, const std::function<double(double)>& g,
                      cplx zeta, const ResolventOptions& opt = {});

/// Boundary values on the cut from above: P int g/(x - w) dw - i pi g(x).
cplx cauchy_boundary(const CouplingDensity& support, const std::function<double(double)>& g,
                     double x, const ResolventOptions& opt = {});

class LevelShift {
 public:
  explicit LevelShift(CouplingDensity density, double gamma = 0.0, ResolventOptions opt = {});

  const CouplingDensity& density() const { return rho_; }
  double gamma() const { return gamma_; }
  double scale() const { return rho_.scale(); }
  const ResolventOptions& options() const { return opt_; }

  /// K(z) for Im z > -gamma. Throws DomainError on or below the cut line.
  cplx operator()(cplx z) const;
  /// dK/dz = -int rho / (z - w + i gamma)^2, same domain.
  cplx derivative(cplx z) const;

  /// K(w + i0+) with gamma neglected: PV - i pi rho(w). Warns if gamma is
  /// not small against the band.
  cplx on_axis(double omega) const;
  /// dK/dz on the axis from above, gamma neglected.
  cplx derivative_on_axis(double omega) const;

  /// The defining integral anywhere in the plane, including below the cut.
  /// Points exactly on the cut get the value from above.
  cplx first_sheet(cplx z) const;
  cplx first_sheet_derivative(cplx z) const;

  /// Im K just above minus Im K just below the cut at Re z = omega
  /// (-2 pi rho(omega) inside the support, 0 outside).
  double branch_cut_jump(double omega) const;

  /// Principal value part P int rho / (omega - w) dw; real on the whole axis.
  double principal_value(double omega) const;

 private:
  cplx boundary(double x) const;             // C+[rho](x)
  cplx boundary_derivative(double x) const;  // C+'[rho](x)
  cplx evaluate(cplx zeta) const;            // C[rho](zeta) with the near-cut switch
  cplx evaluate_derivative(cplx zeta) const;
  void check_domain(cplx z) const;
  double value_floor(cplx zeta) const;
  double derivative_floor() const;

  CouplingDensity rho_;
  double gamma_;
  double weight_ = 0.0;  // int |rho|
  ResolventOptions opt_;
};

class Propagator {
 public:
  Propagator(LevelShift level_shift, double detuning, double kappa);

  const LevelShift& level_shift() const { return ls_; }
  double detuning() const { return delta_; }
  double kappa() const { return kappa_; }
  double scale() const { return ls_.scale(); }

  /// z - Delta + i kappa + K(z) on the first sheet (any z off the cut).
  cplx characteristic(cplx z) const;
  /// 1 + K'(z).
  cplx characteristic_derivative(cplx z) const;

  /// G+(z) for Im z > -gamma; warns when |characteristic| < 1e-12 scale.
  cplx operator()(cplx z) const;

 private:
  LevelShift ls_;
  double delta_;
  double kappa_;
};

}  // namespace nwbec
