#include <facefit/manifest.h>

#include <fstream>

namespace facefit {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return j;
}

void check_keys(const nlohmann::json& obj, const std::string& context,
                const std::set<std::string>& allowed, const std::set<std::string>& required) {
  if (!obj.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (allowed.find(key) == allowed.end())
      throw ConfigError(context + ": unknown key '" + key + "'");
  for (const auto& key : required)
    if (!obj.contains(key)) throw ConfigError(context + ": missing required key '" + key + "'");
}

double get_number(const nlohmann::json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError("key '" + key + "' must be a number");
  return obj[key].get<double>();
}

double require_number(const nlohmann::json& obj, const std::string& context,
                      const std::string& key) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ConfigError(context + ": key '" + key + "' must be present and numeric");
  return obj[key].get<double>();
}

std::string get_string(const nlohmann::json& obj, const std::string& key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) throw ConfigError("key '" + key + "' must be a string");
  return obj[key].get<std::string>();
}

std::string require_string(const nlohmann::json& obj, const std::string& context,
                           const std::string& key) {
  if (!obj.contains(key) || !obj[key].is_string())
    throw ConfigError(context + ": key '" + key + "' must be present and a string");
  return obj[key].get<std::string>();
}

void get_range(const nlohmann::json& obj, const std::string& key, double& lo, double& hi) {
  if (!obj.contains(key)) return;
  const auto& arr = obj[key];
  if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number() || !arr[1].is_number())
    throw ConfigError("key '" + key + "' must be a [lo, hi] number pair");
  lo = arr[0].get<double>();
  hi = arr[1].get<double>();
}

}  // namespace facefit
