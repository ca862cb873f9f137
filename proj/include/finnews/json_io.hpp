#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace finnews {

// Compact single-line dump; invalid UTF-8 is replaced rather than thrown on.
inline std::string dump_line(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::string dump_line(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

}  // namespace finnews
