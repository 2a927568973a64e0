#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "magflow/anosov.hpp"

namespace magflow {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

nlohmann::json orbit_to_json(const OrbitResult& o);

// Full report.  `generated_at` is the only field that varies between
// identical runs; pass nullopt to omit it.
nlohmann::json report_to_json(const AnosovReport& r, const nlohmann::json& config,
                              const std::optional<std::string>& generated_at);

void write_summary(std::ostream& os, const AnosovReport& r);

// UTC time in ISO 8601.
std::string utc_timestamp();

}  // namespace magflow
