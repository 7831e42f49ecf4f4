#pragma once

// Position-dependent coupling eta(r), the collective coupling Omega, and the
// coupling spectral density rho(omega) = int |eta|^2 |Phi|^2
// delta(omega - mu_0(r)/hbar) d^3r together with its dimensionless form.

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nwbec/condensate.hpp"
#include "nwbec/nanowire_field.hpp"

namespace nwbec {

/// Which field derivative drives the atomic transition.
///   translation: d/dy of the static field (rigid displacement of the wire)
///   modal:       -dB/dq for the bent wire's cos(pi z/L) mode shape
enum class GradientSource { translation, modal };

const char* to_string(GradientSource s);

/// eta = g_F mu_B [dBx/dy - i dBy/dy] / (2 sqrt(hbar m_eff omega_nw)), in 1/s.
std::complex<double> eta_from_gradient(const NanowireModel& wire, double lande_g,
                                       const TransverseGradient& grad);

/// r -> eta(r). Cheap to copy; immutable.
class CouplingField {
 public:
  using Fn = std::function<std::complex<double>(const Vec3&)>;

  explicit CouplingField(Fn fn) : fn_(std::move(fn)) {}

  static CouplingField from_nanowire(const NanowireModel& wire, double lande_g,
                                     GradientSource source = GradientSource::translation);
  static CouplingField constant(std::complex<double> eta);

  std::complex<double> operator()(const Vec3& r) const { return fn_(r); }

 private:
  Fn fn_;
};

inline std::complex<double> eta(const CouplingField& field, const Vec3& r) { return field(r); }

struct CloudQuadrature {
  unsigned radial_nodes = 16;    // Gauss-Legendre in the scaled radius s
  unsigned angular_nodes = 32;   // per angle (cos theta and phi)
  unsigned max_angular_nodes = 256;
  double rel_tol = 1e-5;
};

/// Omega = [int |eta|^2 |Phi_bec|^2 d^3r]^(1/2) by a tensor Gauss-Legendre
/// rule in scaled spherical coordinates, doubled until two successive
/// levels agree to rel_tol. Throws ConvergenceError otherwise.
double collective_coupling(const Condensate& cloud, const CouplingField& field,
                           const CloudQuadrature& quad = {});

/// A coupling density rho(omega) >= 0 (1/s) supported on [lower, upper].
/// Immutable value type; copies share the underlying evaluator.
class CouplingDensity {
 public:
  enum class Kind { closed_form, numerical, lorentzian, custom };

  struct Shape {
    virtual ~Shape() = default;
    virtual double value(double omega) const = 0;
    virtual double derivative(double omega) const = 0;
    /// Same, with gap = upper - omega supplied exactly (omega itself may have
    /// rounded onto the edge). Shapes singular at the edge override this.
    virtual double derivative(double omega, double gap) const {
      (void)gap;
      return derivative(omega);
    }
  };

  CouplingDensity(Kind kind, std::shared_ptr<const Shape> shape, double lower, double upper,
                  bool sqrt_upper_edge, double scale, double total_weight,
                  std::vector<double> breakpoints = {}, std::vector<double> nodes = {});

  Kind kind() const { return kind_; }

  /// rho(omega); exactly 0 outside the support.
  double operator()(double omega) const;
  double derivative(double omega) const;
  /// rho'(omega) given the exact distance gap = upper - omega to the edge.
  double derivative(double omega, double gap) const;

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  /// True when rho ~ sqrt(upper - omega) at the upper edge; quadratures then
  /// substitute omega = upper - (upper - lower) u^2.
  bool sqrt_upper_edge() const { return sqrt_edge_; }
  /// Frequency scale used for dimensionless forms and tolerances (mu/hbar).
  double scale() const { return scale_; }
  /// Omega^2 = int rho d omega, in 1/s^2.
  double total_weight() const { return weight_; }
  /// Interior points where the integrand has structure (peaks, kinks).
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  /// Tabulation grid for numerical densities; empty otherwise.
  const std::vector<double>& nodes() const { return nodes_; }

  /// rho -> factor * rho (Omega^2 scales by the same factor).
  CouplingDensity scaled(double factor) const;
  /// Rescaled copy with int rho = omega_sq.
  CouplingDensity with_total_weight(double omega_sq) const;

  /// int rho(omega) w(omega) d omega over the support.
  double integrate(const std::function<double(double)>& weight, double rel_tol = 1e-12) const;

  /// Quadrature breakpoints in the integration variable (omega, or u for
  /// sqrt-edge densities), including both ends and the given extra points.
  std::vector<double> panel_points(std::span<const double> extra_omegas = {}) const;
  /// Maps the integration variable to omega and returns d omega / d var.
  double to_omega(double var, double* jacobian = nullptr) const;
  double from_omega(double omega) const;

 private:
  Kind kind_;
  std::shared_ptr<const Shape> shape_;
  double lower_, upper_;
  bool sqrt_edge_;
  double scale_;
  double factor_ = 1.0;
  double weight_;
  std::vector<double> breakpoints_;
  std::vector<double> nodes_;
};

const char* to_string(CouplingDensity::Kind k);

/// Constant-eta form: rho = 15 N eta0^2 hbar^2 omega sqrt(mu - hbar omega) / (4 mu^(5/2))
/// on [0, mu/hbar]; Omega^2 = N eta0^2.
CouplingDensity density_closed_form(const Condensate& cloud, double eta0);

struct ShellQuadrature {
  unsigned grid_nodes = 513;       // uniform omega nodes on [0, mu/hbar]
  unsigned angular_nodes = 32;     // Gauss-Legendre per angle, doubled until converged
  unsigned max_angular_nodes = 256;
  double rel_tol = 1e-7;           // agreement of successive angular levels
  unsigned check_stride = 16;      // refinement is tested on every stride-th node
};

/// Spatially resolved rho(omega). For each grid node the delta function
/// selects the shell V_T = mu s^2 with s = sqrt(1 - hbar omega / mu); the
/// angular mean A(omega) of |eta|^2 over that shell is tabulated and
/// interpolated monotone-cubically, and
///   rho(omega) = 2 pi R_x R_y R_z hbar s (1 - s^2) A(omega) / g,
/// which pins rho to 0 at both ends of the band.
CouplingDensity density_numerical(const Condensate& cloud, const CouplingField& field,
                                  const ShellQuadrature& quad = {});

/// Lorentzian with centre omega0 and half-width gamma, truncated to
/// omega0 +- truncation * gamma and renormalised to total weight omega_sq.
CouplingDensity lorentzian_density(double omega0, double half_width, double omega_sq,
                                   double scale, double truncation = 2000.0);

/// Wraps an arbitrary density; Omega^2 is computed by quadrature.
CouplingDensity density_from_function(std::function<double(double)> rho,
                                      std::function<double(double)> drho, double lower,
                                      double upper, bool sqrt_upper_edge, double scale,
                                      std::vector<double> breakpoints = {});

/// rho_bar(x) = (mu / hbar Omega^2) rho(x mu / hbar), normalised to 1.
class DimensionlessDensity {
 public:
  explicit DimensionlessDensity(CouplingDensity density);

  double operator()(double x) const;
  double lower() const { return density_.lower() / density_.scale(); }
  double upper() const { return density_.upper() / density_.scale(); }
  double scale() const { return density_.scale(); }

  /// Location and value of the global maximum (bounded Brent search after a
  /// coarse scan).
  double x_max() const { return x_max_; }
  double value_max() const { return value_max_; }

  double integral() const;
  double mean() const;
  double variance() const;

  const CouplingDensity& density() const { return density_; }

 private:
  CouplingDensity density_;
  double x_max_ = 0.0;
  double value_max_ = 0.0;
};

inline DimensionlessDensity dimensionless(const CouplingDensity& d) {
  return DimensionlessDensity(d);
}

/// Single-oscillator stand-in fitted to the statistical moments:
/// centre = mean, half_width = standard deviation of rho / Omega^2.
struct LorentzianFit {
  double center = 0.0;
  double half_width = 0.0;
};

LorentzianFit lorentzian_fit(const CouplingDensity& density);

}  // namespace nwbec
