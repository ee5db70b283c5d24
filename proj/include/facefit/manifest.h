#pragma once

#include <facefit/error.h>

#include <json.hpp>

#include <set>
#include <string>

namespace facefit {

nlohmann::json load_json(const std::string& path);

// Manifests are strict: any key outside `allowed` is a config error, and every
// key in `required` must be present. `context` names the object in messages.
void check_keys(const nlohmann::json& obj, const std::string& context,
                const std::set<std::string>& allowed, const std::set<std::string>& required);

// Typed getters with manifest-flavored error messages.
double get_number(const nlohmann::json& obj, const std::string& key, double fallback);
double require_number(const nlohmann::json& obj, const std::string& context,
                      const std::string& key);
std::string get_string(const nlohmann::json& obj, const std::string& key,
                       const std::string& fallback);
std::string require_string(const nlohmann::json& obj, const std::string& context,
                           const std::string& key);

// [lo, hi] pairs.
void get_range(const nlohmann::json& obj, const std::string& key, double& lo, double& hi);

}  // namespace facefit
