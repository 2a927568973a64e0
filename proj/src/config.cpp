#include "magflow/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Typed access to one JSON object with unknown-key detection.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(join(path_, key), "required key is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(join(path_, key), "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key, double fallback) {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(join(path_, key), "must be strictly positive");
    return d;
  }

  long long integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

FourierSeries2D parse_series(const json& j, const std::string& path) {
  if (j.is_number()) return FourierSeries2D(j.get<double>(), {});
  Section s(j, path);
  const double mean = s.number("mean", 0.0);
  std::vector<FourierMode> modes;
  if (s.has("modes")) {
    const json& arr = s.raw("modes");
    if (!arr.is_array()) throw ConfigError(s.path("modes"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section m(arr[i], s.path("modes") + "[" + std::to_string(i) + "]");
      FourierMode mode;
      mode.kx = static_cast<int>(m.integer("kx", 0));
      mode.ky = static_cast<int>(m.integer("ky", 0));
      mode.cos_coeff = m.number("cos", 0.0);
      mode.sin_coeff = m.number("sin", 0.0);
      m.finish();
      modes.push_back(mode);
    }
  }
  s.finish();
  return FourierSeries2D(mean, std::move(modes));
}

struct TimeSeries {
  std::function<double(double)> f;
  double lower_bound = 0.0;  // analytic lower bound of f
};

TimeSeries parse_profile(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string type = s.string("type");
  TimeSeries out;
  if (type == "constant") {
    const double v = s.number("value");
    out.f = [v](double) { return v; };
    out.lower_bound = v;
  } else if (type == "fourier") {
    const double mean = s.number("mean", 0.0);
    const double omega = s.positive("frequency", 1.0);
    struct Term {
      int n;
      double a, b;
    };
    std::vector<Term> terms;
    double amplitude = 0.0;
    if (s.has("terms")) {
      const json& arr = s.raw("terms");
      if (!arr.is_array()) throw ConfigError(s.path("terms"), "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section t(arr[i], s.path("terms") + "[" + std::to_string(i) + "]");
        Term term{static_cast<int>(t.integer("n")), t.number("cos", 0.0), t.number("sin", 0.0)};
        if (term.n < 1) throw ConfigError(t.path("n"), "harmonic index must be at least 1");
        t.finish();
        amplitude += std::hypot(term.a, term.b);
        terms.push_back(term);
      }
    }
    out.f = [mean, omega, terms](double t) {
      double v = mean;
      for (const auto& term : terms)
        v += term.a * std::cos(term.n * omega * t) + term.b * std::sin(term.n * omega * t);
      return v;
    };
    out.lower_bound = mean - amplitude;
  } else {
    throw ConfigError(s.path("type"), "unknown profile type '" + type + "' (constant, fourier)");
  }
  s.finish();
  return out;
}

}  // namespace

SurfaceModel build_model(const json& model_section) {
  Section s(model_section, "model");
  const std::string kind = s.string("kind");
  try {
    if (kind == "constant_curvature") {
      const double k = s.number("curvature");
      const double b = s.number("magnetic", 0.0);
      const auto chi = s.integer("euler_characteristic");
      std::optional<double> area;
      if (s.has("area")) area = s.positive("area", 1.0);
      s.finish();
      return area ? SurfaceModel::constant_curvature(k, b, static_cast<int>(chi), *area)
                  : SurfaceModel::constant_curvature(k, b, static_cast<int>(chi));
    }
    if (kind == "conformal_torus") {
      const double lx = s.positive("period_x", 1.0);
      const double ly = s.positive("period_y", 1.0);
      FourierSeries2D phi, mag;
      if (s.has("phi")) phi = parse_series(s.raw("phi"), s.path("phi"));
      if (s.has("magnetic")) mag = parse_series(s.raw("magnetic"), s.path("magnetic"));
      s.finish();
      return SurfaceModel::conformal_torus(phi, mag, lx, ly);
    }
    if (kind == "abstract_profile") {
      const TimeSeries ts = parse_profile(s.raw("profile"), s.path("profile"));
      const double k_default = std::sqrt(std::max(0.0, -ts.lower_bound)) + 1e-6;
      const double k = s.has("k_bound") ? s.positive("k_bound", 1.0) : k_default;
      std::optional<int> chi;
      std::optional<double> area;
      if (s.has("euler_characteristic"))
        chi = static_cast<int>(s.integer("euler_characteristic"));
      if (s.has("area")) area = s.positive("area", 1.0);
      const std::string label = s.string("label", "abstract");
      s.finish();
      return SurfaceModel::abstract_profile(ts.f, k, chi, area, label);
    }
  } catch (const DomainError& e) {
    throw ConfigError("model", e.what());
  }
  throw ConfigError("model.kind",
                    "unknown model kind '" + kind +
                        "' (constant_curvature, conformal_torus, abstract_profile)");
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  Section root(j, "");
  cfg.model_spec = root.raw("model");
  cfg.model = build_model(cfg.model_spec);
  ClassifyOptions& c = cfg.classify;

  if (root.has("ensemble")) {
    Section e(root.raw("ensemble"), "ensemble");
    const long long count = e.integer("count", c.ensemble_count);
    if (count < 1) throw ConfigError("ensemble.count", "must be at least 1");
    c.ensemble_count = static_cast<int>(count);
    const long long seed = e.integer("seed", c.seed);
    if (seed < 0) throw ConfigError("ensemble.seed", "must be non-negative");
    c.seed = static_cast<unsigned>(seed);
    c.horizon = e.positive("horizon", c.horizon);
    c.sample_spacing = e.positive("sample_spacing", c.sample_spacing);
    e.finish();
  }
  if (root.has("tolerances")) {
    Section t(root.raw("tolerances"), "tolerances");
    c.integration_tol = t.positive("integration", c.integration_tol);
    c.green_tol = t.positive("green", c.green_tol);
    c.gap_margin = t.positive("gap_margin", c.gap_margin);
    c.negativity_eps = t.positive("negativity_eps", c.negativity_eps);
    c.witness_window = t.positive("witness_window", c.witness_window);
    c.witness_bound = t.positive("witness_bound", c.witness_bound);
    c.contraction_window = t.positive("contraction_window", c.contraction_window);
    if (!(c.contraction_window > 1.0))
      throw ConfigError("tolerances.contraction_window", "must exceed 1");
    t.finish();
  }
  if (root.has("analyses")) {
    Section a(root.raw("analyses"), "analyses");
    c.analyses.inequality = a.boolean("inequality", true);
    c.analyses.conjugate = a.boolean("conjugate", true);
    c.analyses.gaps = a.boolean("gaps", true);
    c.analyses.contraction = a.boolean("contraction", true);
    c.analyses.negativity = a.boolean("negativity", true);
    a.finish();
  }
  if (root.has("sweep")) {
    Section s(root.raw("sweep"), "sweep");
    SweepSpec spec;
    spec.parameter = s.string("parameter", spec.parameter);
    if (spec.parameter != "magnetic_scale")
      throw ConfigError("sweep.parameter", "only 'magnetic_scale' can be swept");
    if (s.has("values")) {
      const json& v = s.raw("values");
      if (!v.is_array() || v.empty())
        throw ConfigError("sweep.values", "expected a non-empty array of numbers");
      for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("sweep.values", "expected numbers");
        spec.values.push_back(x.get<double>());
      }
    } else {
      const double start = s.number("start");
      const double stop = s.number("stop");
      const double step = s.positive("step", 1.0);
      if (stop < start) throw ConfigError("sweep.stop", "must not be below sweep.start");
      const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
      for (long long i = 0; i <= n; ++i)
        spec.values.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    for (std::size_t i = 1; i < spec.values.size(); ++i) {
      const bool up = spec.values[1] > spec.values[0];
      const bool ok = up ? spec.values[i] > spec.values[i - 1] : spec.values[i] < spec.values[i - 1];
      if (!ok) throw ConfigError("sweep.values", "grid must be strictly monotone");
    }
    if (cfg.model && cfg.model->abstract())
      throw ConfigError("sweep.parameter", "abstract profiles carry no magnetic intensity to scale");
    s.finish();
    cfg.sweep = spec;
  }
  if (root.has("output")) {
    Section o(root.raw("output"), "output");
    cfg.output_directory = o.string("directory", cfg.output_directory.string());
    cfg.write_orbit_csv = o.boolean("orbit_csv", cfg.write_orbit_csv);
    const long long stride = o.integer("orbit_csv_stride", cfg.orbit_csv_stride);
    if (stride < 1) throw ConfigError("output.orbit_csv_stride", "must be at least 1");
    cfg.orbit_csv_stride = static_cast<int>(stride);
    o.finish();
  }
  if (root.has("workers")) {
    const long long w = root.integer("workers");
    if (w < 1) throw ConfigError("workers", "must be at least 1");
    c.workers = static_cast<int>(w);
  }
  root.finish();
  c.orbit_export_stride = cfg.write_orbit_csv ? cfg.orbit_csv_stride : 0;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& cfg) {
  const ClassifyOptions& c = cfg.classify;
  json j;
  j["model"] = cfg.model_spec;
  j["ensemble"] = {{"count", c.ensemble_count},
                   {"seed", c.seed},
                   {"horizon", c.horizon},
                   {"sample_spacing", c.sample_spacing}};
  j["tolerances"] = {{"integration", c.integration_tol},
                     {"green", c.green_tol},
                     {"gap_margin", c.gap_margin},
                     {"negativity_eps", c.negativity_eps},
                     {"witness_window", c.witness_window},
                     {"witness_bound", c.witness_bound},
                     {"contraction_window", c.contraction_window}};
  j["analyses"] = {{"inequality", c.analyses.inequality},
                   {"conjugate", c.analyses.conjugate},
                   {"gaps", c.analyses.gaps},
                   {"contraction", c.analyses.contraction},
                   {"negativity", c.analyses.negativity}};
  if (cfg.sweep) j["sweep"] = {{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values}};
  j["output"] = {{"directory", cfg.output_directory.string()},
                 {"orbit_csv", cfg.write_orbit_csv},
                 {"orbit_csv_stride", cfg.orbit_csv_stride}};
  j["workers"] = c.workers;
  return j;
}

}  // namespace magflow
