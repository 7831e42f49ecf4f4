#pragma once

// Scenario configuration, end-to-end pipeline and figure-data emission.
//
// A scenario is a JSON document with the sections condensate, nanowire,
// coupling, dynamics and output. Rates are angular frequencies in 1/s unless
// frequency_input is "cyclic", in which case every rate field (trap and wire
// frequencies, kappa, gamma, detuning, Omega override, sweep grids) is read
// in Hz and multiplied by 2 pi on use. The stored config keeps the values as
// written so that it serialises back unchanged.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nwbec/condensate.hpp"
#include "nwbec/coupling.hpp"
#include "nwbec/nanowire_field.hpp"
#include "nwbec/spectral_dynamics.hpp"

namespace nwbec {

enum class FrequencyInput { angular, cyclic };
enum class DensityMode { closed_form, numerical };

/// Marker for fields that are derived at run time ("auto" / "threshold").
struct Derived {
  bool operator==(const Derived&) const = default;
};
using Setting = std::variant<Derived, double>;

struct CondensateSection {
  double atom_number = 0.0;
  double omega_r = 0.0;
  double omega_z = 0.0;
  double scattering_length = constants::rb87_scattering_length;
  double offset_field = 0.0;
  double mass = constants::rb87_mass;
  double lande_g = constants::rb87_lande_g;
  bool operator==(const CondensateSection&) const = default;
};

struct NanowireSection {
  Geometry geometry = Geometry::bent;
  double length = 0.0;  // unused for the infinite wire
  double distance = 0.0;
  double current = 0.0;
  double omega_nw = 0.0;
  double effective_mass = 0.0;
  std::optional<double> quality_factor;  // exactly one of these two
  std::optional<double> kappa;
  double bend_amplitude = 0.0;
  GradientSource gradient = GradientSource::translation;
  double line_tolerance = 1e-8;
  bool operator==(const NanowireSection&) const = default;
};

struct CouplingSection {
  DensityMode density = DensityMode::closed_form;
  unsigned grid_nodes = 513;
  unsigned angular_nodes = 32;
  unsigned max_angular_nodes = 256;
  double angular_tolerance = 1e-7;
  unsigned cloud_radial_nodes = 16;
  unsigned cloud_angular_nodes = 32;
  double cloud_tolerance = 1e-5;
  double resolvent_tolerance = 1e-10;
  bool operator==(const CouplingSection&) const = default;
};

struct GridSetting {
  Setting min;
  Setting max;
  unsigned points = 21;
  bool operator==(const GridSetting&) const = default;
};

struct DynamicsSection {
  Setting detuning = Derived{};                 // Derived: Delta_th
  double gamma = 0.0;
  std::optional<Setting> omega_override;       // Derived: Omega_th
  Setting t_max = Derived{};                    // Derived: 40 hbar / mu
  unsigned time_points = 401;
  std::optional<SearchRect> search_rect;       // absent: default rectangle
  GridSetting omega_grid{0.0, Derived{}, 21};   // Derived max: 2 Omega_th
  GridSetting delta_grid{Derived{}, Derived{}, 21};  // Derived: Delta_th -+ 10 kappa
  double threshold_band = 1e-3;                 // relative band for "at threshold"
  bool operator==(const DynamicsSection&) const = default;
};

/// fig3 sampling rectangle in units of mu / hbar; imaginary rows are cell centred.
struct Fig3Grid {
  double re_min = -0.5, re_max = 1.5;
  double im_min = -0.5, im_max = 0.5;
  unsigned re_points = 201;
  unsigned im_points = 100;
  bool operator==(const Fig3Grid&) const = default;
};

struct OutputSection {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json", "text"};
  unsigned fig2_points = 1025;
  Fig3Grid fig3;
  bool operator==(const OutputSection&) const = default;

  bool wants(const std::string& format) const;
};

struct ScenarioConfig {
  FrequencyInput frequency_input = FrequencyInput::angular;
  CondensateSection condensate;
  NanowireSection nanowire;
  CouplingSection coupling;
  DynamicsSection dynamics;
  OutputSection output;
  bool operator==(const ScenarioConfig&) const = default;

  /// Converts a rate field as written to rad/s.
  double rate(double as_written) const;
};

/// Parses and validates a config document. `overrides` are "dotted.path=value"
/// strings applied before validation; the value is read as JSON when it parses,
/// as a string otherwise. Throws ConfigError naming the offending field.
ScenarioConfig parse_config_string(const std::string& text,
                                   const std::vector<std::string>& overrides = {});
ScenarioConfig parse_config(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides = {});

/// Canonical JSON with every default written out (sorted keys, 2-space indent).
std::string serialize_config(const ScenarioConfig& config);

/// FNV-1a 64 of the canonical serialisation.
std::uint64_t config_hash(const ScenarioConfig& config);
std::string config_hash_hex(const ScenarioConfig& config);

/// Everything derived from a config, in rad/s.
struct Scenario {
  ScenarioConfig config;
  Condensate cloud;
  NanowireModel wire;          // kappa resolved
  double omega_computed = 0.0; // collective coupling from the spatial pipeline
  double omega = 0.0;          // used: override or computed
  CouplingDensity shape;       // configured mode with weight omega_computed^2
  CouplingDensity density;     // the same shape with weight omega^2
  ThresholdReport threshold;   // from the shape of the configured density
  double detuning = 0.0;
  ResolventOptions resolvent;

  Propagator propagator() const;
  SearchRect search_rect() const;
  std::vector<double> omega_grid() const;
  std::vector<double> delta_grid() const;
  std::vector<double> time_grid() const;
};

/// Runs condensate -> field -> coupling -> density -> thresholds. Module
/// errors are rethrown with the stage name prefixed.
Scenario build_scenario(const ScenarioConfig& config);

enum class Verdict { below, at, above };
const char* to_string(Verdict v);

struct FigureOfMeritReport {
  double mu_over_hbar = 0.0;
  Vec3 tf_diameters = Vec3::Zero();
  double larmor_frequency = 0.0;
  double bec_frequency = 0.0;
  double eta0_dipole = 0.0;      // |eta(0)| in the short-wire limit
  double eta0_infinite = 0.0;    // |eta(0)| in the long-wire limit
  double omega_dipole_estimate = 0.0;  // sqrt(N) |eta0_dipole|
  double omega_computed = 0.0;
  double omega = 0.0;
  double kappa = 0.0;
  double omega_th = 0.0;
  double delta_th = 0.0;
  double omega_coefficient = 0.0;
  double delta_coefficient = 0.0;
  Verdict verdict = Verdict::below;
  std::string density_mode;
  std::string gradient_source;
  std::string units;
};

FigureOfMeritReport figure_of_merit(const Scenario& s);
std::string to_text(const FigureOfMeritReport& r);
std::string to_json(const FigureOfMeritReport& r);

struct Fig2Data {
  std::vector<double> omegas;
  std::vector<double> closed_form;  // constant eta, same Omega^2 as the numerical series
  std::vector<double> numerical;    // spatially resolved eta
  std::vector<double> lorentzian;   // moment fit to the closed form
  LorentzianFit fit_closed;
  LorentzianFit fit_numerical;
  double omega_sq = 0.0;
};

Fig2Data fig2_data(const Scenario& s);

struct Fig3Data {
  std::vector<double> re_z, im_z;  // row-major, im outer
  std::vector<cplx> k;             // first-sheet K(z)
  unsigned re_points = 0, im_points = 0;
};

Fig3Data fig3_data(const Scenario& s);

PoleSet scenario_poles(const Scenario& s);
GainMap scenario_gain_map(const Scenario& s);
PropagatorTrace scenario_trace(const Scenario& s);

/// Writers; each returns the files written. Every file starts with '#'
/// metadata lines carrying the config hash and the unit convention.
std::vector<std::filesystem::path> write_figure_of_merit(const Scenario& s,
                                                         const FigureOfMeritReport& r,
                                                         const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_fig2(const Scenario& s, const Fig2Data& d,
                                              const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_fig3(const Scenario& s, const Fig3Data& d,
                                              const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_poles(const Scenario& s, const PoleSet& p,
                                               const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_gain_map(const Scenario& s, const GainMap& m,
                                                  const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_trace(const Scenario& s, const PropagatorTrace& t,
                                               const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_threshold(const Scenario& s, const ExactThreshold& exact,
                                                   const std::filesystem::path& dir);

/// Process exit codes.
namespace exit_code {
inline constexpr int stable = 0;
inline constexpr int amplifying = 10;
inline constexpr int config_error = 2;
inline constexpr int convergence_error = 3;
inline constexpr int other_error = 11;
}  // namespace exit_code

}  // namespace nwbec
