#pragma once

// Run configuration: JSON file with sections model, ensemble, tolerances,
// analyses, sweep, output and workers.  Unknown keys are rejected.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magflow/anosov.hpp"
#include "magflow/geometry.hpp"

namespace magflow {

struct SweepSpec {
  std::string parameter = "magnetic_scale";
  std::vector<double> values;
};

struct RunConfig {
  nlohmann::json model_spec;  // normalized echo of the model section
  std::optional<SurfaceModel> model;
  ClassifyOptions classify;
  std::optional<SweepSpec> sweep;
  std::filesystem::path output_directory = "magflow_out";
  bool write_orbit_csv = true;
  int orbit_csv_stride = 10;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Normalized configuration with every default filled in.
nlohmann::json config_to_json(const RunConfig& cfg);

// Builds the model described by a model section.
SurfaceModel build_model(const nlohmann::json& model_section);

}  // namespace magflow
