#pragma once

#include <string>

#include "json.hpp"

namespace sc {

inline constexpr const char* kReportSchema = "sc-report/1";
inline constexpr const char* kVersion = "0.1.0";

// Shortest-round-trip would also do, but reports pin 17 significant
// digits so that files are byte-identical across platforms.
std::string fmt_double(double v);

// Wraps a payload with schema, version, and the run configuration.
nlohmann::json make_report(const std::string& kind, nlohmann::json payload,
                           nlohmann::json config);

}  // namespace sc
