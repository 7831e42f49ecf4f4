#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nwbec/errors.hpp"
#include "nwbec/scenario.hpp"

namespace py = pybind11;
using namespace nwbec;

namespace {

py::array_t<double> array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<cplx> array(const std::vector<cplx>& v) { return py::array_t<cplx>(v.size(), v.data()); }

py::dict report_dict(const ThresholdReport& r) {
  py::dict d;
  d["omega_th"] = r.omega_th;
  d["delta_th"] = r.delta_th;
  d["rho_max"] = r.rho_max;
  d["x_max"] = r.x_max;
  d["pv"] = r.pv;
  d["omega_coefficient"] = r.omega_coefficient;
  d["delta_coefficient"] = r.delta_coefficient;
  return d;
}

py::list pole_list(const PoleSet& set) {
  py::list out;
  for (const auto& p : set.poles) {
    py::dict d;
    d["z"] = p.z;
    d["residue"] = p.residue;
    d["residual"] = p.residual;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nanowire-condensate coupling: densities, level shift, poles and thresholds";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def(
      "chemical_potential",
      [](double atom_number, double omega_r, double omega_z, double scattering_length, double mass) {
        AtomSpecies sp;
        sp.scattering_length = scattering_length;
        sp.mass = mass;
        return chemical_potential(sp, TrapConfig{omega_r, omega_z, atom_number, 1.0});
      },
      py::arg("atom_number"), py::arg("omega_r"), py::arg("omega_z"),
      py::arg("scattering_length") = constants::rb87_scattering_length,
      py::arg("mass") = constants::rb87_mass, "Thomas-Fermi chemical potential in J (rates in rad/s).");

  py::class_<CouplingDensity>(m, "CouplingDensity")
      .def("__call__", &CouplingDensity::operator())
      .def("__call__", [](const CouplingDensity& d, py::array_t<double> w) {
        return py::vectorize([&d](double x) { return d(x); })(w);
      })
      .def_property_readonly("lower", &CouplingDensity::lower)
      .def_property_readonly("upper", &CouplingDensity::upper)
      .def_property_readonly("scale", &CouplingDensity::scale)
      .def_property_readonly("total_weight", &CouplingDensity::total_weight)
      .def_property_readonly("kind", [](const CouplingDensity& d) { return to_string(d.kind()); })
      .def("with_total_weight", &CouplingDensity::with_total_weight);

  m.def(
      "closed_form_density",
      [](double band_width, double omega_sq) {
        const double w = band_width;
        return density_from_function(
                   [w](double x) { return 3.75 * (x / w) * std::sqrt(1 - x / w) / w; },
                   [w](double x) {
                     const double u = x / w;
                     return 3.75 * (std::sqrt(1 - u) - 0.5 * u / std::sqrt(1 - u)) / (w * w);
                   },
                   0.0, w, true, w)
            .with_total_weight(omega_sq);
      },
      py::arg("band_width"), py::arg("omega_sq"),
      "15/4 x sqrt(1-x) band on [0, band_width] with total weight omega_sq.");
  m.def("lorentzian_density", &lorentzian_density, py::arg("omega0"), py::arg("half_width"),
        py::arg("omega_sq"), py::arg("scale"), py::arg("truncation") = 2000.0);

  m.def(
      "threshold_report",
      [](const CouplingDensity& d, double kappa) {
        return report_dict(threshold_report(DimensionlessDensity(d), kappa));
      },
      py::arg("density"), py::arg("kappa"));
  m.def(
      "threshold_exact",
      [](const CouplingDensity& d, double gamma, double kappa) {
        const auto t = threshold_exact(d, gamma, kappa);
        py::dict out;
        out["omega_th"] = t.omega_th;
        out["delta_th"] = t.delta_th;
        out["frequency"] = t.frequency;
        return out;
      },
      py::arg("density"), py::arg("gamma"), py::arg("kappa"));

  py::class_<LevelShift>(m, "LevelShift")
      .def(py::init<CouplingDensity, double>(), py::arg("density"), py::arg("gamma") = 0.0)
      .def("__call__", &LevelShift::operator(), py::arg("z"))
      .def("derivative", &LevelShift::derivative, py::arg("z"))
      .def("on_axis", &LevelShift::on_axis, py::arg("omega"))
      .def("first_sheet", &LevelShift::first_sheet, py::arg("z"))
      .def("principal_value", &LevelShift::principal_value, py::arg("omega"));

  py::class_<Propagator>(m, "Propagator")
      .def(py::init<LevelShift, double, double>(), py::arg("level_shift"), py::arg("detuning"),
           py::arg("kappa"))
      .def("__call__", &Propagator::operator(), py::arg("z"))
      .def("characteristic", &Propagator::characteristic, py::arg("z"))
      .def("poles", [](const Propagator& p) { return pole_list(find_poles(p)); })
      .def("growth_rate", [](const Propagator& p) { return growth_rate(p); })
      .def(
          "time_trace",
          [](const Propagator& p, const std::vector<double>& times) {
            const auto t = propagator_time(p, times);
            py::dict out;
            out["times"] = array(t.times);
            out["values"] = array(t.values);
            out["growth_rate"] = t.growth_rate;
            out["initial_value"] = t.initial_value;
            out["poles"] = pole_list(t.poles);
            return out;
          },
          py::arg("times"));

  m.def(
      "gain_map",
      [](const CouplingDensity& shape, double gamma, double kappa, const std::vector<double>& omegas,
         const std::vector<double>& deltas) {
        const auto g = gain_map(shape, gamma, kappa, omegas, deltas);
        py::array_t<double> out({omegas.size(), deltas.size()});
        std::copy(g.gain.begin(), g.gain.end(), out.mutable_data());
        return out;
      },
      py::arg("shape"), py::arg("gamma"), py::arg("kappa"), py::arg("omegas"), py::arg("deltas"));

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def("to_json", &serialize_config)
      .def_property_readonly("hash", &config_hash_hex)
      .def("__eq__", [](const ScenarioConfig& a, const ScenarioConfig& b) { return a == b; });
  m.def("load_config", &parse_config, py::arg("path"),
        py::arg("overrides") = std::vector<std::string>{});
  m.def("parse_config", &parse_config_string, py::arg("text"),
        py::arg("overrides") = std::vector<std::string>{});

  py::class_<Scenario>(m, "Scenario")
      .def(py::init(&build_scenario), py::arg("config"))
      .def_readonly("config", &Scenario::config)
      .def_readonly("omega", &Scenario::omega)
      .def_readonly("omega_computed", &Scenario::omega_computed)
      .def_readonly("detuning", &Scenario::detuning)
      .def_readonly("density", &Scenario::density)
      .def_readonly("shape", &Scenario::shape)
      .def_property_readonly("kappa", [](const Scenario& s) { return s.wire.kappa; })
      .def_property_readonly("band_width", [](const Scenario& s) { return s.cloud.band_width(); })
      .def_property_readonly("tf_radii", [](const Scenario& s) { return s.cloud.tf_radii(); })
      .def_property_readonly("threshold", [](const Scenario& s) { return report_dict(s.threshold); })
      .def("propagator", &Scenario::propagator)
      .def("figure_of_merit",
           [](const Scenario& s) {
             const auto r = figure_of_merit(s);
             py::dict d = py::module_::import("json").attr("loads")(to_json(r));
             return d;
           })
      .def("figure_of_merit_text", [](const Scenario& s) { return to_text(figure_of_merit(s)); })
      .def("poles", [](const Scenario& s) { return pole_list(scenario_poles(s)); })
      .def("fig2",
           [](const Scenario& s) {
             const auto f = fig2_data(s);
             py::dict d;
             d["omega"] = array(f.omegas);
             d["closed_form"] = array(f.closed_form);
             d["numerical"] = array(f.numerical);
             d["lorentzian"] = array(f.lorentzian);
             d["omega0"] = f.fit_closed.center;
             d["gamma"] = f.fit_closed.half_width;
             d["omega_sq"] = f.omega_sq;
             return d;
           })
      .def("fig3",
           [](const Scenario& s) {
             const auto f = fig3_data(s);
             const std::vector<std::size_t> shape{f.im_points, f.re_points};
             py::dict d;
             d["re_z"] = array(f.re_z).reshape(shape);
             d["im_z"] = array(f.im_z).reshape(shape);
             d["k"] = array(f.k).reshape(shape);
             return d;
           })
      .def("write_all",
           [](const Scenario& s, const std::filesystem::path& dir) {
             std::vector<std::filesystem::path> files;
             auto add = [&](const std::vector<std::filesystem::path>& v) {
               files.insert(files.end(), v.begin(), v.end());
             };
             add(write_figure_of_merit(s, figure_of_merit(s), dir));
             add(write_fig2(s, fig2_data(s), dir));
             add(write_fig3(s, fig3_data(s), dir));
             add(write_poles(s, scenario_poles(s), dir));
             add(write_gain_map(s, scenario_gain_map(s), dir));
             add(write_trace(s, scenario_trace(s), dir));
             add(write_threshold(
                 s, threshold_exact(s.shape, s.config.rate(s.config.dynamics.gamma), s.wire.kappa), dir));
             return files;
           },
           py::arg("directory"));
}
