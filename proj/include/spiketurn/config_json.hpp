#pragma once

#include "spiketurn/common.hpp"

#include <set>
#include <string>

#include <json.hpp>

namespace spiketurn {

// Reads fields of a JSON config object, reporting errors by field path.
// Missing keys keep the caller's default; call finish() to reject unknown keys.
class ConfigReader {
public:
  ConfigReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      j_.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  // Sub-object, or nullptr when absent.
  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) return nullptr;
    if (!j_.at(key).is_object()) throw ConfigError(path(key) + ": expected an object");
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(path(key) + ": unknown field");
  }

private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace spiketurn
