// nwbec: command line front end for the scenario pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nwbec/errors.hpp"
#include "nwbec/scenario.hpp"

namespace fs = std::filesystem;
using namespace nwbec;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory (default: output.directory from the config)");
  cmd->add_option("--override", c.overrides, "Dotted-path override key=value, repeatable")
      ->take_all();
}

void list(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
}

bool amplifying(const std::vector<Pole>& poles) {
  for (const auto& p : poles) {
    if (p.z.imag() > 0.0) return true;
  }
  return false;
}

int run(const std::string& name, const Common& c) {
  const ScenarioConfig config = parse_config(c.config, c.overrides);
  const fs::path dir = c.out.empty() ? fs::path(config.output.directory) : fs::path(c.out);
  const Scenario s = build_scenario(config);

  if (name == "figure-of-merit") {
    const auto r = figure_of_merit(s);
    std::cout << to_text(r);
    list(write_figure_of_merit(s, r, dir));
    return r.verdict == Verdict::above ? exit_code::amplifying : exit_code::stable;
  }
  if (name == "fig2") {
    list(write_fig2(s, fig2_data(s), dir));
    return exit_code::stable;
  }
  if (name == "fig3") {
    list(write_fig3(s, fig3_data(s), dir));
    return exit_code::stable;
  }
  if (name == "poles") {
    const auto poles = scenario_poles(s);
    for (const auto& p : poles.poles) {
      std::printf("z = %.10e %+.10e i   R = %.6e %+.6e i\n", p.z.real(), p.z.imag(),
                  p.residue.real(), p.residue.imag());
    }
    if (poles.empty()) std::cout << "no poles in the search rectangle\n";
    list(write_poles(s, poles, dir));
    return amplifying(poles.poles) ? exit_code::amplifying : exit_code::stable;
  }
  if (name == "gain-map") {
    const auto map = scenario_gain_map(s);
    std::size_t failed = 0;
    for (const auto& e : map.cell_errors) failed += e.empty() ? 0 : 1;
    if (failed) std::cerr << failed << " gain-map cells failed; see the file header\n";
    list(write_gain_map(s, map, dir));
    return exit_code::stable;
  }
  if (name == "trace") {
    const auto t = scenario_trace(s);
    std::printf("fitted growth rate %.10e s^-1, G(0+) = %.3e %+.3e i\n", t.growth_rate,
                t.initial_value.real(), t.initial_value.imag());
    for (const auto& d : t.diagnostics) std::cerr << "diagnostic: " << d << "\n";
    list(write_trace(s, t, dir));
    return amplifying(t.poles.poles) ? exit_code::amplifying : exit_code::stable;
  }
  if (name == "threshold") {
    const auto exact =
        threshold_exact(s.shape, config.rate(config.dynamics.gamma), s.wire.kappa, {});
    std::printf("analytic: Omega_th = %.10e s^-1, Delta_th = %.10e s^-1\n", s.threshold.omega_th,
                s.threshold.delta_th);
    std::printf("exact:    Omega_th = %.10e s^-1, Delta_th = %.10e s^-1\n", exact.omega_th,
                exact.delta_th);
    list(write_threshold(s, exact, dir));
    return exit_code::stable;
  }
  throw std::logic_error("unhandled subcommand " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nanowire-condensate coupling: thresholds, poles, gain maps and figure data"};
  app.require_subcommand(1);
  Common common;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"figure-of-merit", "Condensate, coupling and threshold summary with a stability verdict"},
      {"fig2", "Coupling density: closed form, spatially resolved and Lorentzian fit"},
      {"fig3", "Level shift K(z) over a complex rectangle with the graphical-solution planes"},
      {"poles", "Poles and residues of G+ in the search rectangle"},
      {"gain-map", "Largest Im z over the (Omega, Delta) grids"},
      {"trace", "Time-domain propagator G(t)"},
      {"threshold", "Analytic and exact amplification thresholds"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code::config_error;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run(name, common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_code::config_error;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return exit_code::convergence_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::other_error;
  }
}
