#include "stretchchaos/report.hpp"

#include <cmath>
#include <cstdio>

namespace sc {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json make_report(const std::string& kind, nlohmann::json payload,
                           nlohmann::json config) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["version"] = kVersion;
  j["kind"] = kind;
  j["config"] = std::move(config);
  j["result"] = std::move(payload);
  return j;
}

}  // namespace sc
