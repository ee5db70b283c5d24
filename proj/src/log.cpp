#include <facefit/log.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace facefit {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("FACEFIT_LOG");
    if (env == nullptr) return LogLevel::info;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::quiet;
    if (std::strcmp(env, "trace") == 0) return LogLevel::trace;
    return LogLevel::info;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::fprintf(stderr, "[facefit] %s\n", msg.c_str());
}

void log_trace(const std::string& msg) {
  if (log_level() >= LogLevel::trace) std::fprintf(stderr, "[facefit:trace] %s\n", msg.c_str());
}

}  // namespace facefit
