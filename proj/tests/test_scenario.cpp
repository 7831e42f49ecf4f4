#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nwbec/errors.hpp"
#include "nwbec/scenario.hpp"

using namespace nwbec;
namespace fs = std::filesystem;

namespace {

const fs::path kReferenceConfig = fs::path(NWBEC_SOURCE_DIR) / "configs" / "rb87_bent_wire.json";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nwbec_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string error_field(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

const char* kMinimal = R"({
  "condensate": {"atom_number": 6e4, "omega_r": 3141.59, "omega_z": 1256.64, "offset_field": 1.143e-5},
  "nanowire": {"geometry": "dipole", "length": 2e-6, "distance": 4.5e-6, "current": 2e-5,
               "omega_nw": 502654.8, "effective_mass": 7e-22, "quality_factor": 1e5}
})";

}  // namespace

TEST_CASE("config round trip and hash") {
  const auto c = parse_config(kReferenceConfig);
  CHECK(c.frequency_input == FrequencyInput::cyclic);
  CHECK(c.rate(1.0) == doctest::Approx(2 * M_PI));
  const auto text = serialize_config(c);
  const auto back = parse_config_string(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash_hex(c).size() == 16);

  auto other = parse_config(kReferenceConfig, {"nanowire.current=1e-5"});
  CHECK(config_hash(other) != config_hash(c));

  const auto m = parse_config_string(kMinimal);
  CHECK(m.frequency_input == FrequencyInput::angular);
  CHECK(m.coupling.grid_nodes == 513);
  CHECK(std::holds_alternative<Derived>(m.dynamics.detuning));
}

TEST_CASE("config errors name the offending field") {
  nlohmann::json j = nlohmann::json::parse(kMinimal);
  j["condensate"].erase("omega_r");
  CHECK(error_field(j.dump()) == "condensate.omega_r");

  j = nlohmann::json::parse(kMinimal);
  j["nanowire"]["kappa"] = 5.0;
  CHECK(error_field(j.dump()) == "nanowire.quality_factor");

  j = nlohmann::json::parse(kMinimal);
  j["nanowire"]["colour"] = "red";
  CHECK(error_field(j.dump()) == "nanowire.colour");

  j = nlohmann::json::parse(kMinimal);
  j["condensate"]["atom_number"] = "many";
  CHECK(error_field(j.dump()) == "condensate.atom_number");

  j = nlohmann::json::parse(kMinimal);
  j["nanowire"]["gradient"] = "modal";
  CHECK(error_field(j.dump()) == "nanowire.gradient");

  CHECK_THROWS_AS(parse_config_string("{ \"condensate\": "), ConfigError);
  CHECK_THROWS_AS(parse_config_string(kMinimal, {"nanowire.distance=-1"}), ConfigError);
  CHECK_THROWS_AS(parse_config_string(kMinimal, {"no_equals_sign"}), ConfigError);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("verdicts follow the coupling strength") {
  const auto base = build_scenario(parse_config(kReferenceConfig));
  const auto r = figure_of_merit(base);
  CHECK(r.verdict == Verdict::above);
  CHECK(std::string(to_string(r.verdict)) == "above threshold");

  const auto half = build_scenario(parse_config(kReferenceConfig, {"nanowire.current=10e-6"}));
  CHECK(half.omega_computed == doctest::Approx(0.5 * base.omega_computed).epsilon(1e-6));
  CHECK(figure_of_merit(half).verdict == Verdict::below);

  const auto at = build_scenario(parse_config(kReferenceConfig, {"dynamics.omega_override=threshold"}));
  CHECK(at.omega == doctest::Approx(at.threshold.omega_th).epsilon(1e-14));
  CHECK(figure_of_merit(at).verdict == Verdict::at);
  CHECK(std::string(to_string(Verdict::at)) == "at threshold");
}

TEST_CASE("fig2 data") {
  const auto s = build_scenario(parse_config(kReferenceConfig, {"output.fig2_points=1025"}));
  const auto d = fig2_data(s);
  REQUIRE(d.omegas.size() == 1025);
  double trap = 0;
  for (std::size_t k = 1; k < d.omegas.size(); ++k) {
    trap += 0.5 * (d.omegas[k] - d.omegas[k - 1]) * (d.closed_form[k] + d.closed_form[k - 1]);
  }
  CHECK(trap == doctest::Approx(d.omega_sq).epsilon(1e-3));
  double trap_num = 0;
  for (std::size_t k = 1; k < d.omegas.size(); ++k) {
    trap_num += 0.5 * (d.omegas[k] - d.omegas[k - 1]) * (d.numerical[k] + d.numerical[k - 1]);
  }
  CHECK(trap_num == doctest::Approx(d.omega_sq).epsilon(1e-3));

  const fs::path dir = scratch("fig2");
  write_fig2(s, d, dir);
  const auto side = nlohmann::json::parse(slurp(dir / "fig2_density.json"));
  const double W = s.cloud.band_width();
  CHECK(side["omega0"].get<double>() == doctest::Approx(4.0 / 7.0 * W).epsilon(1e-8));
  CHECK(side["gamma"].get<double>() == doctest::Approx(std::sqrt(8.0 / 147.0) * W).epsilon(1e-8));
  CHECK(side["config_hash"].get<std::string>() == config_hash_hex(s.config));
}

TEST_CASE("fig3 level shift: jump across the cut and half-plane signs") {
  const auto s = build_scenario(parse_config(
      kReferenceConfig, {"output.fig3={\"re_min\":-0.5,\"re_max\":1.5,\"im_min\":-1e-6,\"im_max\":1e-6,"
                     "\"re_points\":41,\"im_points\":2}"}));
  const auto d = fig3_data(s);
  REQUIRE(d.im_points == 2);
  const auto& rho = s.density;
  for (unsigned j = 0; j < d.re_points; ++j) {
    const cplx below = d.k[j];
    const cplx above = d.k[d.re_points + j];
    CHECK(d.im_z[j] < 0.0);
    CHECK(d.im_z[d.re_points + j] > 0.0);
    const double x = d.re_z[j];
    const double jump = above.imag() - below.imag();
    if (x > rho.lower() && x < rho.upper()) {
      CHECK(jump == doctest::Approx(-2 * M_PI * rho(x)).epsilon(0.01));
    } else if (std::min(std::abs(x - rho.lower()), std::abs(x - rho.upper())) > 1e-3 * s.cloud.band_width()) {
      CHECK(std::abs(jump) <= 1e-3 * s.density.total_weight() / s.cloud.band_width());
    }
  }
  // Im K < 0 in the upper half-plane and > 0 below, on the default grid
  const auto full = fig3_data(build_scenario(parse_config(kReferenceConfig, {"output.fig3.re_points=21", "output.fig3.im_points=10"})));
  for (std::size_t c = 0; c < full.k.size(); ++c) {
    if (full.im_z[c] > 0) CHECK(full.k[c].imag() < 0.0);
    if (full.im_z[c] < 0) CHECK(full.k[c].imag() > 0.0);
  }
}

TEST_CASE("gain map sign agrees with the verdict") {
  const auto base = build_scenario(parse_config(kReferenceConfig));
  for (double factor : {0.8, 1.25}) {
    const double om = factor * base.threshold.omega_th / (2 * M_PI);
    const std::string grid = "{\"min\":" + std::to_string(om) + ",\"max\":" + std::to_string(om) +
                             ",\"points\":1}";
    const auto s = build_scenario(parse_config(
        kReferenceConfig, {"dynamics.omega_override=" + std::to_string(om), "dynamics.omega_grid=" + grid,
                       "dynamics.delta_grid.points=5"}));
    const auto map = scenario_gain_map(s);
    double best = -1e300;
    for (double g : map.gain) best = std::max(best, g);
    const auto v = figure_of_merit(s).verdict;
    CHECK(v == (factor > 1 ? Verdict::above : Verdict::below));
    CHECK((best > 0) == (v == Verdict::above));
  }
}

TEST_CASE("outputs carry headers and are deterministic") {
  const auto cfg = parse_config(kReferenceConfig, {"output.fig3.re_points=11", "output.fig3.im_points=4",
                                               "dynamics.omega_grid.points=3",
                                               "dynamics.delta_grid.points=3",
                                               "dynamics.time.points=21"});
  auto write_all = [&](const fs::path& dir) {
    const auto s = build_scenario(cfg);
    std::vector<fs::path> files;
    auto add = [&](const std::vector<fs::path>& v) { files.insert(files.end(), v.begin(), v.end()); };
    add(write_figure_of_merit(s, figure_of_merit(s), dir));
    add(write_fig3(s, fig3_data(s), dir));
    add(write_poles(s, scenario_poles(s), dir));
    add(write_gain_map(s, scenario_gain_map(s), dir));
    add(write_trace(s, scenario_trace(s), dir));
    add(write_threshold(s, threshold_exact(s.shape, 0.0, s.wire.kappa), dir));
    return files;
  };
  const auto a = write_all(scratch("det_a"));
  const auto b = write_all(scratch("det_b"));
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() >= 7);
  const std::string hash = config_hash_hex(cfg);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CAPTURE(a[k].string());
    const std::string text = slurp(a[k]);
    CHECK(text == slurp(b[k]));
    if (a[k].extension() == ".json") {
      const auto j = nlohmann::json::parse(text);
      CHECK(j["config_hash"].get<std::string>() == hash);
      CHECK(j.contains("units"));
    } else {
      CHECK(text.rfind("# nwbec ", 0) == 0);
      CHECK(text.find("# config_hash: " + hash + "\n") != std::string::npos);
      CHECK(text.find("# units: ") != std::string::npos);
    }
  }
}

TEST_CASE("pipeline errors carry the stage name") {
  try {
    build_scenario(parse_config(kReferenceConfig, {"coupling.cloud_tolerance=1e-15",
                                               "coupling.max_angular_nodes=32"}));
    FAIL("expected an error");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("coupling: ") == 0);
  }
}
