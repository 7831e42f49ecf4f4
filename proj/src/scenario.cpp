#include "nwbec/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nwbec/constants.hpp"
#include "nwbec/errors.hpp"
#include "nwbec/parallel.hpp"

namespace nwbec {

using nlohmann::json;

namespace {

const char* kUnits =
    "angular frequencies in rad/s (s^-1), times in s, densities in s^-1, K in s^-1";

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, remembering which keys were read so that the rest
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string field(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(field(key), "required field is missing");
    }
    return as_number(*v, key);
  }

  std::optional<double> maybe_number(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return as_number(*v, key);
  }

  unsigned count(const std::string& key, unsigned fallback, unsigned minimum) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
      throw ConfigError(field(key), "expected an integer");
    }
    const auto n = v->get<long long>();
    if (n < static_cast<long long>(minimum) || n > 1'000'000'000LL) {
      throw ConfigError(field(key), "must be an integer >= " + std::to_string(minimum));
    }
    return static_cast<unsigned>(n);
  }

  std::string word(const std::string& key, const std::string& fallback,
                   const std::vector<std::string>& allowed) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    const auto s = v->get<std::string>();
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(field(key), "must be one of: " + list);
    }
    return s;
  }

  // A number, or the given keyword for a value derived at run time.
  std::optional<Setting> setting(const std::string& key, const char* keyword) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (v->is_string()) {
      if (v->get<std::string>() == keyword) return Setting{Derived{}};
      throw ConfigError(field(key), std::string("expected a number or \"") + keyword + "\"");
    }
    return Setting{as_number(*v, key)};
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

 private:
  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& constraint) {
  if (!ok) throw ConfigError(field, constraint);
}

double number_of(const Setting& s) { return std::get<double>(s); }
bool is_derived(const Setting& s) { return std::holds_alternative<Derived>(s); }

json setting_json(const Setting& s, const char* keyword) {
  return is_derived(s) ? json(keyword) : json(number_of(s));
}

CondensateSection read_condensate(Reader r) {
  CondensateSection c;
  c.atom_number = r.number("atom_number");
  c.omega_r = r.number("omega_r");
  c.omega_z = r.number("omega_z");
  c.scattering_length = r.number("scattering_length", c.scattering_length);
  c.offset_field = r.number("offset_field");
  c.mass = r.number("mass", c.mass);
  c.lande_g = r.number("lande_g", c.lande_g);
  r.finish();
  require(c.atom_number >= 1.0, r.field("atom_number"), "must be >= 1");
  require(c.omega_r > 0.0, r.field("omega_r"), "must be > 0");
  require(c.omega_z > 0.0, r.field("omega_z"), "must be > 0");
  require(c.scattering_length > 0.0, r.field("scattering_length"), "must be > 0");
  require(c.offset_field > 0.0, r.field("offset_field"), "must be > 0");
  require(c.mass > 0.0, r.field("mass"), "must be > 0");
  require(c.lande_g != 0.0, r.field("lande_g"), "must be nonzero");
  return c;
}

NanowireSection read_nanowire(Reader r) {
  NanowireSection n;
  n.geometry = *geometry_from_string(r.word("geometry", "bent", {"dipole", "infinite", "bent"}));
  n.length = r.number("length", n.geometry == Geometry::infinite ? std::optional<double>(0.0)
                                                                 : std::nullopt);
  n.distance = r.number("distance");
  n.current = r.number("current");
  n.omega_nw = r.number("omega_nw");
  n.effective_mass = r.number("effective_mass");
  n.quality_factor = r.maybe_number("quality_factor");
  n.kappa = r.maybe_number("kappa");
  n.bend_amplitude = r.number("bend_amplitude", 0.0);
  n.gradient = r.word("gradient", "translation", {"translation", "modal"}) == "modal"
                   ? GradientSource::modal
                   : GradientSource::translation;
  n.line_tolerance = r.number("line_tolerance", n.line_tolerance);
  r.finish();
  if (n.geometry != Geometry::infinite) {
    require(n.length > 0.0, r.field("length"), "must be > 0");
  } else {
    require(n.length >= 0.0, r.field("length"), "must be >= 0");
  }
  require(n.distance > 0.0, r.field("distance"), "must be > 0");
  require(n.current != 0.0, r.field("current"), "must be nonzero");
  require(n.omega_nw > 0.0, r.field("omega_nw"), "must be > 0");
  require(n.effective_mass > 0.0, r.field("effective_mass"), "must be > 0");
  if (n.quality_factor.has_value() == n.kappa.has_value()) {
    throw ConfigError(r.field("quality_factor"),
                      "exactly one of quality_factor and kappa must be given");
  }
  if (n.quality_factor) require(*n.quality_factor > 0.0, r.field("quality_factor"), "must be > 0");
  if (n.kappa) require(*n.kappa >= 0.0, r.field("kappa"), "must be >= 0");
  require(n.line_tolerance > 0.0 && n.line_tolerance < 1.0, r.field("line_tolerance"),
          "must be in (0, 1)");
  require(n.gradient == GradientSource::translation || n.geometry == Geometry::bent,
          r.field("gradient"), "\"modal\" requires geometry \"bent\"");
  return n;
}

CouplingSection read_coupling(Reader r) {
  CouplingSection c;
  c.density = r.word("density", "closed_form", {"closed_form", "numerical"}) == "numerical"
                  ? DensityMode::numerical
                  : DensityMode::closed_form;
  c.grid_nodes = r.count("grid_nodes", c.grid_nodes, 3);
  c.angular_nodes = r.count("angular_nodes", c.angular_nodes, 2);
  c.max_angular_nodes = r.count("max_angular_nodes", c.max_angular_nodes, 2);
  c.angular_tolerance = r.number("angular_tolerance", c.angular_tolerance);
  c.cloud_radial_nodes = r.count("cloud_radial_nodes", c.cloud_radial_nodes, 2);
  c.cloud_angular_nodes = r.count("cloud_angular_nodes", c.cloud_angular_nodes, 2);
  c.cloud_tolerance = r.number("cloud_tolerance", c.cloud_tolerance);
  c.resolvent_tolerance = r.number("resolvent_tolerance", c.resolvent_tolerance);
  r.finish();
  require(c.max_angular_nodes >= c.angular_nodes, r.field("max_angular_nodes"),
          "must be >= angular_nodes");
  for (auto [key, v] : {std::pair{"angular_tolerance", c.angular_tolerance},
                        std::pair{"cloud_tolerance", c.cloud_tolerance},
                        std::pair{"resolvent_tolerance", c.resolvent_tolerance}}) {
    require(v > 0.0 && v < 1.0, r.field(key), "must be in (0, 1)");
  }
  return c;
}

GridSetting read_grid(Reader r, const GridSetting& fallback) {
  GridSetting g = fallback;
  if (auto v = r.setting("min", "auto")) g.min = *v;
  if (auto v = r.setting("max", "auto")) g.max = *v;
  g.points = r.count("points", g.points, 1);
  r.finish();
  if (!is_derived(g.min) && !is_derived(g.max)) {
    require(number_of(g.max) >= number_of(g.min), r.field("max"), "must be >= min");
  }
  return g;
}

DynamicsSection read_dynamics(Reader r) {
  DynamicsSection d;
  if (auto v = r.setting("detuning", "threshold")) d.detuning = *v;
  d.gamma = r.number("gamma", 0.0);
  d.omega_override = r.setting("omega_override", "threshold");
  if (const json* t = r.find("time")) {
    Reader tr(*t, r.field("time"));
    if (auto v = tr.setting("t_max", "auto")) d.t_max = *v;
    d.time_points = tr.count("points", d.time_points, 2);
    tr.finish();
    if (!is_derived(d.t_max)) require(number_of(d.t_max) > 0.0, tr.field("t_max"), "must be > 0");
  }
  if (const json* s = r.find("search_rect")) {
    if (s->is_string() && s->get<std::string>() == "auto") {
      d.search_rect.reset();
    } else {
      Reader sr(*s, r.field("search_rect"));
      SearchRect rect{sr.number("re_min"), sr.number("re_max"), sr.number("im_min"),
                      sr.number("im_max")};
      sr.finish();
      require(rect.re_max > rect.re_min, sr.field("re_max"), "must be > re_min");
      require(rect.im_max > rect.im_min, sr.field("im_max"), "must be > im_min");
      require(rect.im_min >= 0.0, sr.field("im_min"), "must be >= 0 (upper half-plane)");
      d.search_rect = rect;
    }
  }
  if (const json* g = r.find("omega_grid")) d.omega_grid = read_grid(Reader(*g, r.field("omega_grid")), d.omega_grid);
  if (const json* g = r.find("delta_grid")) d.delta_grid = read_grid(Reader(*g, r.field("delta_grid")), d.delta_grid);
  d.threshold_band = r.number("threshold_band", d.threshold_band);
  r.finish();
  require(d.gamma >= 0.0, r.field("gamma"), "must be >= 0");
  if (d.omega_override && !is_derived(*d.omega_override)) {
    require(number_of(*d.omega_override) >= 0.0, r.field("omega_override"), "must be >= 0");
  }
  if (!is_derived(d.omega_grid.min)) {
    require(number_of(d.omega_grid.min) >= 0.0, r.field("omega_grid.min"), "must be >= 0");
  }
  require(d.threshold_band >= 0.0, r.field("threshold_band"), "must be >= 0");
  return d;
}

OutputSection read_output(Reader r) {
  OutputSection o;
  if (const json* d = r.find("directory")) {
    if (!d->is_string() || d->get<std::string>().empty()) {
      throw ConfigError(r.field("directory"), "expected a non-empty string");
    }
    o.directory = d->get<std::string>();
  }
  if (const json* f = r.find("formats")) {
    if (!f->is_array()) throw ConfigError(r.field("formats"), "expected an array of strings");
    o.formats.clear();
    for (const auto& e : *f) {
      if (!e.is_string()) throw ConfigError(r.field("formats"), "expected an array of strings");
      const auto s = e.get<std::string>();
      if (s != "csv" && s != "json" && s != "text") {
        throw ConfigError(r.field("formats"), "entries must be \"csv\", \"json\" or \"text\"");
      }
      if (std::find(o.formats.begin(), o.formats.end(), s) == o.formats.end()) o.formats.push_back(s);
    }
  }
  o.fig2_points = r.count("fig2_points", o.fig2_points, 3);
  if (const json* g = r.find("fig3")) {
    Reader gr(*g, r.field("fig3"));
    auto& f = o.fig3;
    f.re_min = gr.number("re_min", f.re_min);
    f.re_max = gr.number("re_max", f.re_max);
    f.im_min = gr.number("im_min", f.im_min);
    f.im_max = gr.number("im_max", f.im_max);
    f.re_points = gr.count("re_points", f.re_points, 2);
    f.im_points = gr.count("im_points", f.im_points, 1);
    gr.finish();
    require(f.re_max > f.re_min, gr.field("re_max"), "must be > re_min");
    require(f.im_max > f.im_min, gr.field("im_max"), "must be > im_min");
  }
  r.finish();
  return o;
}

ScenarioConfig read_config(const json& doc) {
  Reader r(doc, "");
  ScenarioConfig c;
  c.frequency_input = r.word("frequency_input", "angular", {"angular", "cyclic"}) == "cyclic"
                          ? FrequencyInput::cyclic
                          : FrequencyInput::angular;
  auto section = [&](const char* key) -> const json& {
    const json* s = r.find(key);
    if (!s) throw ConfigError(key, "required section is missing");
    return *s;
  };
  c.condensate = read_condensate(Reader(section("condensate"), "condensate"));
  c.nanowire = read_nanowire(Reader(section("nanowire"), "nanowire"));
  static const json empty = json::object();
  const json* cp = r.find("coupling");
  c.coupling = read_coupling(Reader(cp ? *cp : empty, "coupling"));
  const json* dy = r.find("dynamics");
  c.dynamics = read_dynamics(Reader(dy ? *dy : empty, "dynamics"));
  const json* out = r.find("output");
  c.output = read_output(Reader(out ? *out : empty, "output"));
  r.finish();
  return c;
}

void apply_override(json& doc, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("", "override \"" + item + "\" is not of the form key=value");
  }
  const std::string key = item.substr(0, eq);
  const std::string text = item.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component in override");
    if (!node->is_object()) throw ConfigError(key, "override path runs through a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json config_json(const ScenarioConfig& c) {
  json j;
  j["frequency_input"] = c.frequency_input == FrequencyInput::cyclic ? "cyclic" : "angular";
  const auto& cd = c.condensate;
  j["condensate"] = {{"atom_number", cd.atom_number}, {"omega_r", cd.omega_r},
                     {"omega_z", cd.omega_z},         {"scattering_length", cd.scattering_length},
                     {"offset_field", cd.offset_field}, {"mass", cd.mass},
                     {"lande_g", cd.lande_g}};
  const auto& n = c.nanowire;
  json nw = {{"geometry", to_string(n.geometry)},
             {"length", n.length},
             {"distance", n.distance},
             {"current", n.current},
             {"omega_nw", n.omega_nw},
             {"effective_mass", n.effective_mass},
             {"bend_amplitude", n.bend_amplitude},
             {"gradient", to_string(n.gradient)},
             {"line_tolerance", n.line_tolerance}};
  if (n.quality_factor) nw["quality_factor"] = *n.quality_factor;
  if (n.kappa) nw["kappa"] = *n.kappa;
  j["nanowire"] = nw;
  const auto& cp = c.coupling;
  j["coupling"] = {{"density", cp.density == DensityMode::numerical ? "numerical" : "closed_form"},
                   {"grid_nodes", cp.grid_nodes},
                   {"angular_nodes", cp.angular_nodes},
                   {"max_angular_nodes", cp.max_angular_nodes},
                   {"angular_tolerance", cp.angular_tolerance},
                   {"cloud_radial_nodes", cp.cloud_radial_nodes},
                   {"cloud_angular_nodes", cp.cloud_angular_nodes},
                   {"cloud_tolerance", cp.cloud_tolerance},
                   {"resolvent_tolerance", cp.resolvent_tolerance}};
  const auto& d = c.dynamics;
  auto grid = [](const GridSetting& g) {
    return json{{"min", setting_json(g.min, "auto")},
                {"max", setting_json(g.max, "auto")},
                {"points", g.points}};
  };
  json dy = {{"detuning", setting_json(d.detuning, "threshold")},
             {"gamma", d.gamma},
             {"time", {{"t_max", setting_json(d.t_max, "auto")}, {"points", d.time_points}}},
             {"omega_grid", grid(d.omega_grid)},
             {"delta_grid", grid(d.delta_grid)},
             {"threshold_band", d.threshold_band}};
  if (d.omega_override) dy["omega_override"] = setting_json(*d.omega_override, "threshold");
  if (d.search_rect) {
    dy["search_rect"] = {{"re_min", d.search_rect->re_min},
                         {"re_max", d.search_rect->re_max},
                         {"im_min", d.search_rect->im_min},
                         {"im_max", d.search_rect->im_max}};
  } else {
    dy["search_rect"] = "auto";
  }
  j["dynamics"] = dy;
  const auto& o = c.output;
  j["output"] = {{"directory", o.directory},
                 {"formats", o.formats},
                 {"fig2_points", o.fig2_points},
                 {"fig3",
                  {{"re_min", o.fig3.re_min},
                   {"re_max", o.fig3.re_max},
                   {"im_min", o.fig3.im_min},
                   {"im_max", o.fig3.im_max},
                   {"re_points", o.fig3.re_points},
                   {"im_points", o.fig3.im_points}}}};
  return j;
}

// Module errors keep their type and gain the stage name.
template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  const std::string prefix = std::string(stage) + ": ";
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ConvergenceError& e) {
    std::string msg = e.what();
    const std::string tail = " [" + e.diagnostics() + "]";
    if (!e.diagnostics().empty() && msg.size() >= tail.size() &&
        msg.compare(msg.size() - tail.size(), tail.size(), tail) == 0) {
      msg.resize(msg.size() - tail.size());
    }
    throw ConvergenceError(prefix + msg, e.diagnostics());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const SingularityError& e) {
    throw SingularityError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

std::vector<double> linspace(double lo, double hi, unsigned n) {
  std::vector<double> v(n);
  for (unsigned k = 0; k < n; ++k) {
    v[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  }
  if (n > 1) v.back() = hi;
  return v;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

using Meta = std::vector<std::pair<std::string, std::string>>;

// Writes '#' metadata lines followed by the caller's content.
class OutFile {
 public:
  OutFile(const Scenario& s, const std::filesystem::path& path, const std::string& artifact,
          const Meta& meta = {})
      : path_(path), os_(path) {
    if (!os_) throw Error("cannot open " + path.string() + " for writing");
    os_ << "# nwbec " << artifact << "\n";
    os_ << "# config_hash: " << config_hash_hex(s.config) << "\n";
    os_ << "# units: " << kUnits << "\n";
    for (const auto& [k, v] : meta) os_ << "# " << k << ": " << v << "\n";
  }

  std::ostream& stream() { return os_; }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      os_ << (first ? "" : ",") << num(v);
      first = false;
    }
    os_ << "\n";
  }

  std::filesystem::path close() {
    os_.close();
    if (!os_) throw Error("failed writing " + path_.string());
    return path_;
  }

 private:
  std::filesystem::path path_;
  std::ofstream os_;
};

std::filesystem::path write_json_file(const Scenario& s, const std::filesystem::path& path,
                                      json body) {
  body["config_hash"] = config_hash_hex(s.config);
  body["units"] = kUnits;
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << body.dump(2) << "\n";
  if (!os) throw Error("failed writing " + path.string());
  return path;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

bool OutputSection::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

double ScenarioConfig::rate(double as_written) const {
  return frequency_input == FrequencyInput::cyclic ? 2.0 * constants::pi * as_written
                                                   : as_written;
}

ScenarioConfig parse_config_string(const std::string& text,
                                   const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "JSON parse error at " + location(text, e.byte) + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return read_config(doc);
}

ScenarioConfig parse_config(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config_string(ss.str(), overrides);
  } catch (const ConfigError& e) {
    if (!e.field().empty()) throw;
    throw ConfigError("", path.string() + ": " + e.what());
  }
}

std::string serialize_config(const ScenarioConfig& config) {
  return config_json(config).dump(2);
}

std::uint64_t config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : config_json(config).dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const ScenarioConfig& config) { return hex64(config_hash(config)); }

Propagator Scenario::propagator() const {
  return Propagator(LevelShift(density, config.rate(config.dynamics.gamma), resolvent), detuning,
                    wire.kappa);
}

SearchRect Scenario::search_rect() const {
  if (!config.dynamics.search_rect) return default_search_rect(propagator());
  SearchRect r = *config.dynamics.search_rect;
  r.re_min = config.rate(r.re_min);
  r.re_max = config.rate(r.re_max);
  r.im_min = config.rate(r.im_min);
  r.im_max = config.rate(r.im_max);
  return r;
}

std::vector<double> Scenario::omega_grid() const {
  const auto& g = config.dynamics.omega_grid;
  const double lo = is_derived(g.min) ? 0.0 : config.rate(number_of(g.min));
  const double hi = is_derived(g.max) ? 2.0 * threshold.omega_th : config.rate(number_of(g.max));
  return linspace(lo, std::max(lo, hi), g.points);
}

std::vector<double> Scenario::delta_grid() const {
  const auto& g = config.dynamics.delta_grid;
  const double span = wire.kappa > 0.0 ? 10.0 * wire.kappa : 1e-3 * cloud.band_width();
  const double lo = is_derived(g.min) ? detuning - span : config.rate(number_of(g.min));
  const double hi = is_derived(g.max) ? detuning + span : config.rate(number_of(g.max));
  return linspace(lo, std::max(lo, hi), g.points);
}

std::vector<double> Scenario::time_grid() const {
  const auto& d = config.dynamics;
  const double t_max = is_derived(d.t_max) ? 40.0 / cloud.band_width() : number_of(d.t_max);
  return linspace(0.0, t_max, d.time_points);
}

Scenario build_scenario(const ScenarioConfig& config) {
  const auto& cc = config.condensate;
  const auto& nc = config.nanowire;
  const auto& cp = config.coupling;

  Condensate cloud = staged("condensate", [&] {
    AtomSpecies species{cc.mass, cc.lande_g, cc.scattering_length};
    TrapConfig trap{config.rate(cc.omega_r), config.rate(cc.omega_z), cc.atom_number,
                    cc.offset_field};
    return Condensate(species, trap);
  });

  NanowireModel wire = staged("nanowire", [&] {
    NanowireModel w;
    w.geometry = nc.geometry;
    w.length = nc.length;
    w.distance = nc.distance;
    w.current = nc.current;
    w.omega_nw = config.rate(nc.omega_nw);
    w.effective_mass = nc.effective_mass;
    w.kappa = nc.quality_factor ? NanowireModel::kappa_from_quality(w.omega_nw, *nc.quality_factor)
                                : config.rate(*nc.kappa);
    w.bend_amplitude = nc.bend_amplitude;
    w.line_tolerance = nc.line_tolerance;
    w.validate();
    return w;
  });

  const CouplingField field = CouplingField::from_nanowire(wire, cc.lande_g, nc.gradient);
  const double omega_computed = staged("coupling", [&] {
    CloudQuadrature q;
    q.radial_nodes = cp.cloud_radial_nodes;
    q.angular_nodes = cp.cloud_angular_nodes;
    q.max_angular_nodes = std::max(cp.max_angular_nodes, cp.cloud_angular_nodes);
    q.rel_tol = cp.cloud_tolerance;
    return collective_coupling(cloud, field, q);
  });

  CouplingDensity shape = staged("density", [&] {
    if (cp.density == DensityMode::closed_form) {
      return density_closed_form(cloud, omega_computed / std::sqrt(cc.atom_number));
    }
    ShellQuadrature q;
    q.grid_nodes = cp.grid_nodes;
    q.angular_nodes = cp.angular_nodes;
    q.max_angular_nodes = cp.max_angular_nodes;
    q.rel_tol = cp.angular_tolerance;
    return density_numerical(cloud, field, q);
  });

  ResolventOptions ropt;
  ropt.rel_tol = cp.resolvent_tolerance;
  const ThresholdReport threshold = staged("threshold", [&] {
    return threshold_report(DimensionlessDensity(shape), wire.kappa, ropt);
  });

  const auto& dyn = config.dynamics;
  double omega = omega_computed;
  if (dyn.omega_override) {
    omega = is_derived(*dyn.omega_override) ? threshold.omega_th
                                            : config.rate(number_of(*dyn.omega_override));
  }
  CouplingDensity density = omega == 0.0 ? shape.scaled(0.0) : shape.with_total_weight(omega * omega);
  const double detuning =
      is_derived(dyn.detuning) ? threshold.delta_th : config.rate(number_of(dyn.detuning));

  return Scenario{config,    std::move(cloud), wire,     omega_computed, omega,
                  std::move(shape), std::move(density), threshold, detuning, ropt};
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::below: return "below threshold";
    case Verdict::at: return "at threshold";
    case Verdict::above: return "above threshold";
  }
  return "?";
}

FigureOfMeritReport figure_of_merit(const Scenario& s) {
  FigureOfMeritReport r;
  const auto& cfg = s.config;
  r.mu_over_hbar = s.cloud.band_width();
  r.tf_diameters = 2.0 * s.cloud.tf_radii();
  r.larmor_frequency = s.cloud.larmor_frequency();
  r.bec_frequency = s.cloud.bec_frequency();
  auto eta_limit = [&](Geometry g) {
    NanowireModel w = s.wire;
    w.geometry = g;
    if (g == Geometry::dipole && !(w.length > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::abs(eta_from_gradient(w, cfg.condensate.lande_g, grad_y(w, Vec3::Zero())));
  };
  staged("figure of merit", [&] {
    r.eta0_dipole = eta_limit(Geometry::dipole);
    r.eta0_infinite = eta_limit(Geometry::infinite);
  });
  r.omega_dipole_estimate = std::sqrt(cfg.condensate.atom_number) * r.eta0_dipole;
  r.omega_computed = s.omega_computed;
  r.omega = s.omega;
  r.kappa = s.wire.kappa;
  r.omega_th = s.threshold.omega_th;
  r.delta_th = s.threshold.delta_th;
  r.omega_coefficient = s.threshold.omega_coefficient;
  r.delta_coefficient = s.threshold.delta_coefficient;
  const double band = cfg.dynamics.threshold_band * r.omega_th;
  if (std::abs(r.omega - r.omega_th) <= band) {
    r.verdict = Verdict::at;
  } else {
    r.verdict = r.omega > r.omega_th ? Verdict::above : Verdict::below;
  }
  r.density_mode = cfg.coupling.density == DensityMode::numerical ? "numerical" : "closed_form";
  r.gradient_source = to_string(cfg.nanowire.gradient);
  r.units = std::string(kUnits) + "; rates quoted as Hz are read as angular frequencies" +
            (cfg.frequency_input == FrequencyInput::cyclic
                 ? "; frequency_input=cyclic: rate inputs were multiplied by 2 pi"
                 : "; frequency_input=angular: rate inputs used as given");
  return r;
}

std::string to_text(const FigureOfMeritReport& r) {
  std::ostringstream os;
  os.precision(6);
  auto line = [&](const std::string& label) -> std::ostream& {
    os << std::left << std::setw(36) << label;
    return os;
  };
  const Vec3 um = r.tf_diameters * 1e6;
  line("chemical potential mu/hbar") << r.mu_over_hbar << " s^-1\n";
  line("TF diameters") << um.x() << " x " << um.y() << " x " << um.z() << " um\n";
  line("Larmor frequency omega_L") << r.larmor_frequency << " s^-1\n";
  line("BEC frequency omega_bec") << r.bec_frequency << " s^-1\n";
  line("|eta(0)| dipole / infinite wire") << r.eta0_dipole << " / " << r.eta0_infinite << " s^-1\n";
  line("sqrt(N) |eta(0)| dipole") << r.omega_dipole_estimate << " s^-1\n";
  line("Omega computed (" + r.gradient_source + ")") << r.omega_computed << " s^-1\n";
  if (r.omega != r.omega_computed) line("Omega override") << r.omega << " s^-1\n";
  line("kappa") << r.kappa << " s^-1\n";
  line("Omega_th (" + r.density_mode + ")") << r.omega_th << " s^-1\n";
  line("Delta_th") << r.delta_th << " s^-1\n";
  line("Omega_th^2 / (kappa mu/hbar)") << r.omega_coefficient << "\n";
  line("(Delta_th - x_max mu/hbar) / kappa") << r.delta_coefficient << "\n";
  line("verdict") << to_string(r.verdict) << "\n";
  os << "units: " << r.units << "\n";
  return os.str();
}

std::string to_json(const FigureOfMeritReport& r) {
  json j = {{"mu_over_hbar", r.mu_over_hbar},
            {"tf_diameters", {r.tf_diameters.x(), r.tf_diameters.y(), r.tf_diameters.z()}},
            {"larmor_frequency", r.larmor_frequency},
            {"bec_frequency", r.bec_frequency},
            {"eta0_dipole", finite_or_null(r.eta0_dipole)},
            {"eta0_infinite", finite_or_null(r.eta0_infinite)},
            {"omega_dipole_estimate", finite_or_null(r.omega_dipole_estimate)},
            {"omega_computed", r.omega_computed},
            {"omega", r.omega},
            {"kappa", r.kappa},
            {"omega_th", r.omega_th},
            {"delta_th", r.delta_th},
            {"omega_coefficient", r.omega_coefficient},
            {"delta_coefficient", r.delta_coefficient},
            {"verdict", to_string(r.verdict)},
            {"density_mode", r.density_mode},
            {"gradient_source", r.gradient_source},
            {"units", r.units}};
  return j.dump(2);
}

Fig2Data fig2_data(const Scenario& s) {
  const auto& cp = s.config.coupling;
  Fig2Data d;
  const CouplingDensity numerical = staged("fig2", [&] {
    const CouplingField field =
        CouplingField::from_nanowire(s.wire, s.config.condensate.lande_g, s.config.nanowire.gradient);
    ShellQuadrature q;
    q.grid_nodes = cp.grid_nodes;
    q.angular_nodes = cp.angular_nodes;
    q.max_angular_nodes = cp.max_angular_nodes;
    q.rel_tol = cp.angular_tolerance;
    return density_numerical(s.cloud, field, q);
  });
  d.omega_sq = numerical.total_weight();
  const CouplingDensity closed =
      density_closed_form(s.cloud, std::sqrt(d.omega_sq / s.config.condensate.atom_number));
  d.fit_closed = lorentzian_fit(closed);
  d.fit_numerical = lorentzian_fit(numerical);
  const double W = s.cloud.band_width();
  const double g = d.fit_closed.half_width;
  const double w0 = d.fit_closed.center;
  d.omegas = linspace(0.0, W, s.config.output.fig2_points);
  for (double w : d.omegas) {
    d.closed_form.push_back(closed(w));
    d.numerical.push_back(numerical(w));
    d.lorentzian.push_back(d.omega_sq * g / constants::pi / ((w - w0) * (w - w0) + g * g));
  }
  return d;
}

Fig3Data fig3_data(const Scenario& s) {
  const auto& g = s.config.output.fig3;
  const double W = s.cloud.band_width();
  Fig3Data d;
  d.re_points = g.re_points;
  d.im_points = g.im_points;
  const auto res = linspace(g.re_min * W, g.re_max * W, g.re_points);
  const double h = (g.im_max - g.im_min) * W / g.im_points;
  const std::size_t n = static_cast<std::size_t>(g.re_points) * g.im_points;
  d.re_z.resize(n);
  d.im_z.resize(n);
  d.k.resize(n);
  for (unsigned i = 0; i < g.im_points; ++i) {
    for (unsigned j = 0; j < g.re_points; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * g.re_points + j;
      d.re_z[c] = res[j];
      d.im_z[c] = g.im_min * W + (i + 0.5) * h;
    }
  }
  const Propagator p = s.propagator();
  staged("fig3", [&] {
    parallel_for(n, [&](std::size_t c) {
      d.k[c] = p.level_shift().first_sheet(cplx(d.re_z[c], d.im_z[c]));
    });
  });
  return d;
}

PoleSet scenario_poles(const Scenario& s) {
  return staged("poles", [&] { return find_poles(s.propagator(), s.search_rect()); });
}

GainMap scenario_gain_map(const Scenario& s) {
  return staged("gain map", [&] {
    return gain_map(s.shape, s.config.rate(s.config.dynamics.gamma), s.wire.kappa, s.omega_grid(),
                    s.delta_grid(), s.resolvent);
  });
}

PropagatorTrace scenario_trace(const Scenario& s) {
  return staged("trace", [&] { return propagator_time(s.propagator(), s.time_grid()); });
}

std::vector<std::filesystem::path> write_figure_of_merit(const Scenario& s,
                                                         const FigureOfMeritReport& r,
                                                         const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> out;
  const auto& o = s.config.output;
  if (o.wants("json")) {
    out.push_back(write_json_file(s, dir / "figure_of_merit.json", json::parse(to_json(r))));
  }
  if (o.wants("text")) {
    OutFile f(s, dir / "figure_of_merit.txt", "figure of merit");
    f.stream() << to_text(r);
    out.push_back(f.close());
  }
  return out;
}

std::vector<std::filesystem::path> write_fig2(const Scenario& s, const Fig2Data& d,
                                              const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> out;
  const auto& o = s.config.output;
  if (o.wants("csv")) {
    OutFile f(s, dir / "fig2_density.csv", "fig2 coupling density",
              {{"omega_sq", num(d.omega_sq)}, {"lorentzian", "moment fit to the closed form"}});
    f.stream() << "omega,rho_closed_form,rho_numerical,rho_lorentzian\n";
    for (std::size_t k = 0; k < d.omegas.size(); ++k) {
      f.row({d.omegas[k], d.closed_form[k], d.numerical[k], d.lorentzian[k]});
    }
    out.push_back(f.close());
  }
  if (o.wants("json")) {
    const double W = s.cloud.band_width();
    json j = {{"omega0", d.fit_closed.center},
              {"gamma", d.fit_closed.half_width},
              {"omega0_over_band", d.fit_closed.center / W},
              {"gamma_over_band", d.fit_closed.half_width / W},
              {"omega_sq", d.omega_sq},
              {"numerical_fit",
               {{"omega0", d.fit_numerical.center}, {"gamma", d.fit_numerical.half_width}}},
              {"grid", {{"points", d.omegas.size()}, {"lower", 0.0}, {"upper", W}}},
              {"band_width", W}};
    out.push_back(write_json_file(s, dir / "fig2_density.json", j));
  }
  return out;
}

std::vector<std::filesystem::path> write_fig3(const Scenario& s, const Fig3Data& d,
                                              const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> out;
  if (!s.config.output.wants("csv")) return out;
  const double delta = s.detuning;
  const double kappa = s.wire.kappa;
  OutFile f(s, dir / "fig3_level_shift.csv", "fig3 level shift",
            {{"detuning", num(delta)},
             {"kappa", num(kappa)},
             {"gamma", num(s.config.rate(s.config.dynamics.gamma))},
             {"omega_sq", num(s.density.total_weight())},
             {"planes", "plane_re = Re z - Delta, plane_im = -(Im z + kappa)"}});
  f.stream() << "re_z,im_z,re_K,im_K,plane_re,plane_im\n";
  for (std::size_t c = 0; c < d.k.size(); ++c) {
    f.row({d.re_z[c], d.im_z[c], d.k[c].real(), d.k[c].imag(), d.re_z[c] - delta,
           -(d.im_z[c] + kappa)});
  }
  out.push_back(f.close());
  return out;
}

std::vector<std::filesystem::path> write_poles(const Scenario& s, const PoleSet& p,
                                               const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> out;
  if (!s.config.output.wants("csv")) return out;
  Meta meta{{"omega", num(s.omega)},
            {"detuning", num(s.detuning)},
            {"kappa", num(s.wire.kappa)},
            {"search_rect", num(p.rect.re_min) + " " + num(p.rect.re_max) + " " +
                                num(p.rect.im_min) + " " + num(p.rect.im_max)},
            {"starts", std::to_string(p.starts)},
            {"converged_starts", std::to_string(p.converged_starts)}};
  for (const auto& d : p.diagnostics) meta.emplace_back("diagnostic", d);
  OutFile f(s, dir / "poles.csv", "poles", meta);
  f.stream() << "re,im,re_residue,im_residue\n";
  for (const auto& pole : p.poles) {
    f.row({pole.z.real(), pole.z.imag(), pole.residue.real(), pole.residue.imag()});
  }
  out.push_back(f.close());
  return out;
}

std::vector<std::filesystem::path> write_gain_map(const Scenario& s, const GainMap& m,
                                                  const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> out;
  if (!s.config.output.wants("csv")) return out;
  Meta meta{{"kappa", num(s.wire.kappa)},
            {"omega_th", num(s.threshold.omega_th)},
            {"delta_th", num(s.threshold.delta_th)},
            {"gain", "largest Im z of the poles; without poles -min |f|/|f'| on the real axis"}};
  for (std::size_t c = 0; c < m.cell_errors.size(); ++c) {
    if (!m.cell_errors[c].empty()) {
      meta.emplace_back("cell_error", std::to_string(c) + " " + m.cell_errors[c]);
    }
  }
  OutFile f(s, dir / "gain_map.csv", "gain map", meta);
  f.stream() << "omega,delta,gain\n";
  for (std::size_t i = 0; i < m.omegas.size(); ++i) {
    for (std::size_t j = 0; j < m.deltas.size(); ++j) {
      f.row({m.omegas[i], m.deltas[j], m.at(i, j)});
    }
  }
  out.push_back(f.close());
  return out;
}

std::vector<std::filesystem::path> write_trace(const Scenario& s, const PropagatorTrace& t,
                                               const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> out;
  if (!s.config.output.wants("csv")) return out;
  Meta meta{{"omega", num(s.omega)},
            {"detuning", num(s.detuning)},
            {"kappa", num(s.wire.kappa)},
            {"fitted_growth_rate", num(t.growth_rate)},
            {"initial_value", num(t.initial_value.real()) + " " + num(t.initial_value.imag())},
            {"poles_found", std::to_string(t.poles.poles.size())},
            {"poles_expected", std::to_string(t.expected_poles)}};
  for (const auto& d : t.diagnostics) meta.emplace_back("diagnostic", d);
  OutFile f(s, dir / "trace.csv", "propagator trace", meta);
  f.stream() << "t,re_G,im_G,abs_G\n";
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    f.row({t.times[k], t.values[k].real(), t.values[k].imag(), std::abs(t.values[k])});
  }
  out.push_back(f.close());
  return out;
}

std::vector<std::filesystem::path> write_threshold(const Scenario& s, const ExactThreshold& exact,
                                                   const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> out;
  if (!s.config.output.wants("json")) return out;
  const auto& t = s.threshold;
  json j = {{"kappa", s.wire.kappa},
            {"band_width", s.cloud.band_width()},
            {"analytic",
             {{"omega_th", t.omega_th},
              {"delta_th", t.delta_th},
              {"rho_max", t.rho_max},
              {"x_max", t.x_max},
              {"pv", t.pv},
              {"omega_coefficient", t.omega_coefficient},
              {"delta_coefficient", t.delta_coefficient}}},
            {"exact",
             {{"omega_th", exact.omega_th},
              {"delta_th", exact.delta_th},
              {"frequency", exact.frequency},
              {"gamma", s.config.rate(s.config.dynamics.gamma)}}},
            {"density_mode",
             s.config.coupling.density == DensityMode::numerical ? "numerical" : "closed_form"}};
  out.push_back(write_json_file(s, dir / "threshold.json", j));
  return out;
}

}  // namespace nwbec
