#pragma once

// Poles of G+, amplification thresholds, gain maps and the time-domain
// propagator G(t).

#include <optional>
#include <string>
#include <vector>

#include "nwbec/resolvent.hpp"

namespace nwbec {

struct SearchRect {
  double re_min = 0.0, re_max = 0.0;
  double im_min = 0.0, im_max = 0.0;

  bool contains(cplx z) const {
    return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min && z.imag() <= im_max;
  }
  bool operator==(const SearchRect&) const = default;
};

struct Pole {
  cplx z;
  cplx residue;          // 1 / (1 + K'(z))
  double residual = 0.0; // |z - Delta + i kappa + K(z)|
};

struct PoleSearchOptions {
  unsigned grid = 8;             // grid x grid Newton starts over the rectangle
  unsigned axis_samples = 96;    // scan just above im_min for extra starts
  int max_iterations = 80;
  double residual_tol = 1e-8;    // in units of the band scale
  double merge_tol = 1e-9;       // distinct roots closer than this (scale units) are merged
};

struct PoleSet {
  std::vector<Pole> poles;  // sorted by decreasing Im z, then |Re z - Delta|
  SearchRect rect;
  int starts = 0;
  int converged_starts = 0;
  std::vector<std::string> diagnostics;

  bool empty() const { return poles.empty(); }
  /// Largest Im z; ties go to the pole closer to the detuning.
  const Pole* dominant() const { return poles.empty() ? nullptr : &poles.front(); }
};

/// Re z in [-0.2, 1.2] x scale widened to include Delta, Im z in [0, 0.5] x scale.
SearchRect default_search_rect(const Propagator& p);

/// Multistart Newton with deflation. Every reported pole has residual below
/// residual_tol * scale. Starts that fail are counted, never fatal.
PoleSet find_poles(const Propagator& p, const SearchRect& rect, const PoleSearchOptions& opt = {});
inline PoleSet find_poles(const Propagator& p) { return find_poles(p, default_search_rect(p)); }

/// Plain Newton from `start`; nullopt if it does not converge.
std::optional<Pole> polish_pole(const Propagator& p, cplx start,
                                const PoleSearchOptions& opt = {});

/// Omega_th = sqrt(kappa W / (pi rho_bar_max)), W = scale.
double threshold_omega(const DimensionlessDensity& density, double kappa);

/// Delta_th = W x_max + (Omega_th^2 / W) P int rho_bar(y) / (x_max - y) dy.
double threshold_detuning(const DimensionlessDensity& density, double omega_th,
                          const ResolventOptions& opt = {});

struct ThresholdReport {
  double omega_th = 0.0;
  double delta_th = 0.0;
  double rho_max = 0.0;            // max rho_bar
  double x_max = 0.0;              // argmax rho_bar
  double pv = 0.0;                 // P int rho_bar(y) / (x_max - y) dy
  double omega_coefficient = 0.0;  // Omega_th^2 / (kappa W) = 1 / (pi rho_max)
  double delta_coefficient = 0.0;  // (Delta_th - W x_max) / kappa = pv / (pi rho_max)
};

ThresholdReport threshold_report(const DimensionlessDensity& density, double kappa,
                                 const ResolventOptions& opt = {});

struct ExactThresholdOptions {
  unsigned scan = 1025;        // coarse scan of the support before the Brent refinement
  double omega_max = 0.0;      // > 0: bracket limit, exceeding it is an error
  ResolventOptions resolvent;
};

struct ExactThreshold {
  double omega_th = 0.0;
  double delta_th = 0.0;
  double frequency = 0.0;  // real frequency of the marginal pole
};

/// Threshold without the gamma -> 0 simplification. A pole crosses Im z = 0
/// at a real frequency w iff kappa = -Im K(w) and Delta = w + Re K(w), and K
/// scales with Omega^2, so the smallest Omega over all Delta is
/// Omega_th^2 = kappa / max_w(-Im K1(w)) with K1 the level shift of the unit
/// normalised density.
ExactThreshold threshold_exact(const CouplingDensity& shape, double gamma, double kappa,
                               const ExactThresholdOptions& opt = {});

/// Largest Im z over the poles in `rect`; without poles the stability
/// margin -min_w |f(w)| / |f'(w)| on the real axis (f the characteristic
/// function), which is -kappa for an uncoupled wire.
double growth_rate(const Propagator& p, const SearchRect& rect);
inline double growth_rate(const Propagator& p) { return growth_rate(p, default_search_rect(p)); }

struct GainMap {
  std::vector<double> omegas;
  std::vector<double> deltas;
  std::vector<double> gain;  // gain[i * deltas.size() + j] for (omegas[i], deltas[j])
  std::vector<std::string> cell_errors;  // empty string where the cell succeeded

  double at(std::size_t i, std::size_t j) const { return gain[i * deltas.size() + j]; }
};

/// Gain over an (Omega, Delta) grid; the density shape is rescaled to Omega^2
/// in each cell. Failed cells hold NaN and an error message.
GainMap gain_map(const CouplingDensity& shape, double gamma, double kappa,
                 const std::vector<double>& omegas, const std::vector<double>& deltas,
                 const ResolventOptions& opt = {});

struct TimeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  PoleSearchOptions poles{16, 256, 80, 1e-8, 1e-9};
};

struct PropagatorTrace {
  std::vector<double> times;
  std::vector<cplx> values;
  double growth_rate = 0.0;  // least-squares slope of log|G| over the last third
  cplx initial_value;        // G(0+) from the same decomposition (should be 1)
  PoleSet poles;             // every pole off the cut, above and below it
  int expected_poles = 0;    // from the argument principle around the cut
  std::vector<std::string> diagnostics;
};

/// G(t) = sum_k R_k exp(-i z_k t) - exp(-gamma t) int rho(w) exp(-i w t) / (f+(w) f-(w)) dw
/// where the sum runs over all poles off the cut and f+- are the boundary
/// values of the characteristic function on the cut. Obtained from the
/// inverse transform by closing the contour downwards around the cut.
PropagatorTrace propagator_time(const Propagator& p, const std::vector<double>& times,
                                const TimeOptions& opt = {});

/// Least-squares slope of log|values| over the last third of the samples.
double fit_growth_rate(const std::vector<double>& times, const std::vector<cplx>& values);

}  // namespace nwbec
