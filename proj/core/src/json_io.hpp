#pragma once

// nlohmann/json conversions shared by report.cpp and checkpoint.cpp. Private
// to the library so the public headers stay free of the JSON dependency.

#include <optional>

#include "json.hpp"
#include "permll/trainer.hpp"

namespace permll::detail {

using nlohmann::json;

inline json optional_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json epoch_to_json(const EpochRecord& r);
EpochRecord epoch_from_json(const json& j);
json report_to_json_value(const RunReport& r);
RunReport report_from_json_value(const json& j);

}  // namespace permll::detail
