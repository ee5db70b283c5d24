#pragma once

#include <string>

namespace facefit {

enum class LogLevel { quiet = 0, info = 1, trace = 2 };

// Level comes from the FACEFIT_LOG environment variable (quiet|info|trace),
// defaulting to info. Messages go to stderr.
LogLevel log_level();

void log_info(const std::string& msg);
void log_trace(const std::string& msg);

}  // namespace facefit
