#pragma once

#include <algorithm>
#include <iterator>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

// Like NLOHMANN_JSON_SERIALIZE_ENUM, but an unknown string is a parse error
// instead of silently mapping to the first enumerator.
#define SOCRATIC_STRICT_JSON_ENUM(ENUM_TYPE, ...)                                             \
  inline void to_json(nlohmann::json& j, const ENUM_TYPE& e) {                               \
    static const std::pair<ENUM_TYPE, const char*> table[] = __VA_ARGS__;                    \
    auto it = std::find_if(std::begin(table), std::end(table),                               \
                           [e](const auto& p) { return p.first == e; });                     \
    j = it != std::end(table) ? it->second : "";                                             \
  }                                                                                          \
  inline void from_json(const nlohmann::json& j, ENUM_TYPE& e) {                             \
    static const std::pair<ENUM_TYPE, const char*> table[] = __VA_ARGS__;                    \
    const auto& s = j.get_ref<const std::string&>();                                         \
    auto it = std::find_if(std::begin(table), std::end(table),                               \
                           [&s](const auto& p) { return s == p.second; });                   \
    if (it == std::end(table)) {                                                             \
      throw nlohmann::json::type_error::create(302, "unknown " #ENUM_TYPE " value '" + s + "'", \
                                               &j);                                          \
    }                                                                                        \
    e = it->first;                                                                           \
  }
