#include "magflow/runner.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "magflow/errors.hpp"
#include "magflow/report.hpp"

namespace magflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void prepare_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("output.directory", "cannot create output directory " + dir.string());
}

std::ofstream open_output(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("output.directory", "cannot write " + file.string());
  return out;
}

// Config echo stored in reports; output location and worker count do not
// affect results.
json report_config(const RunConfig& cfg) {
  json j = config_to_json(cfg);
  j["output"].erase("directory");
  j.erase("workers");
  return j;
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, res.ptr);
}

}  // namespace

int exit_code_for(Verdict v) { return v == Verdict::Inconclusive ? 2 : 0; }

int run(const RunConfig& cfg, std::ostream& log, int verbosity) {
  if (!cfg.model) throw ConfigError("model", "no model configured");
  prepare_directory(cfg.output_directory);
  if (verbosity > 0) log << "classifying " << to_string(cfg.model->kind()) << " model\n";
  const AnosovReport rep = classify(*cfg.model, cfg.classify);

  {
    auto out = open_output(cfg.output_directory / "report.json");
    out << report_to_json(rep, report_config(cfg), utc_timestamp()).dump(2) << "\n";
  }
  {
    auto out = open_output(cfg.output_directory / "summary.txt");
    write_summary(out, rep);
  }
  for (const auto& o : rep.orbits) {
    if (!o.trace) continue;
    std::ostringstream name;
    name << "orbit_" << std::setw(3) << std::setfill('0') << o.id << ".csv";
    auto out = open_output(cfg.output_directory / name.str());
    o.trace->write_csv(out);
  }
  log << "verdict: " << to_string(rep.verdict) << " (" << rep.reason << ")\n";
  if (verbosity > 0) write_summary(log, rep);
  return exit_code_for(rep.verdict);
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep", "no sweep section in config");
  if (!cfg.model) throw ConfigError("model", "no model configured");
  const auto& values = cfg.sweep->values;
  std::vector<SweepPoint> points(values.size());
  ClassifyOptions per_point = cfg.classify;
  per_point.workers = 1;
  per_point.orbit_export_stride = 0;
  std::vector<SurfaceModel> models;
  models.reserve(values.size());
  for (double v : values) models.push_back(cfg.model->with_magnetic_scale(v));

  auto work = [&](std::size_t i) {
    points[i].parameter = values[i];
    points[i].report = classify(models[i], per_point);
  };
  const int workers = std::max(1, std::min<int>(cfg.classify.workers, static_cast<int>(values.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < values.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < values.size(); i = next++) work(i);
      });
    for (auto& t : pool) t.join();
  }
  return points;
}

int sweep(const RunConfig& cfg, std::ostream& log, int verbosity) {
  prepare_directory(cfg.output_directory);
  const auto points = run_sweep(cfg);

  int code = 0;
  json arr = json::array();
  {
    auto out = open_output(cfg.output_directory / "sweep.csv");
    out << "parameter,verdict,min_gap,fitted_c,lhs,rhs\n";
    for (const auto& p : points) {
      const auto& r = p.report;
      std::optional<double> lhs, rhs;
      if (r.inequality) {
        lhs = r.inequality->lhs;
        rhs = r.inequality->rhs;
      }
      out << csv_number(p.parameter) << ',' << to_string(r.verdict) << ',' << csv_number(r.min_gap)
          << ',' << csv_number(r.min_contraction_rate) << ',' << csv_number(lhs) << ','
          << csv_number(rhs) << '\n';
      json pj = report_to_json(r, json::object(), std::nullopt);
      pj.erase("config");
      pj.erase("schema_version");
      pj.erase("tool");
      pj["parameter"] = p.parameter;
      arr.push_back(std::move(pj));
      if (r.verdict == Verdict::Inconclusive) code = 2;
      if (verbosity > 0)
        log << cfg.sweep->parameter << " = " << p.parameter << ": " << to_string(r.verdict) << " ("
            << r.reason << ")\n";
    }
  }
  {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool"] = {{"name", "magflow"}, {"version", kToolVersion}};
    j["generated_at"] = utc_timestamp();
    j["config"] = report_config(cfg);
    j["sweep"] = {{"parameter", cfg.sweep->parameter}, {"points", std::move(arr)}};
    auto out = open_output(cfg.output_directory / "report.json");
    out << j.dump(2) << "\n";
  }
  {
    auto out = open_output(cfg.output_directory / "summary.txt");
    out << "sweep over " << cfg.sweep->parameter << "\n";
    for (const auto& p : points)
      out << std::setw(10) << p.parameter << "  " << std::left << std::setw(18)
          << to_string(p.report.verdict) << std::right << "  " << p.report.reason << "\n";
  }
  log << "sweep: " << points.size() << " points written to "
      << (cfg.output_directory / "sweep.csv").string() << "\n";
  return code;
}

}  // namespace magflow
