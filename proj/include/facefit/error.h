#pragma once

#include <stdexcept>
#include <string>

namespace facefit {

// Category strings are the machine-parsable tokens the CLI prints on failure:
// io, format, dimension, degenerate, numeric, config.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

private:
  std::string category_;
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io", what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

// Model file errors, kept distinct so callers can tell a bad header from a
// short read from internally inconsistent sizes.
struct MalformedHeader : FormatError {
  explicit MalformedHeader(const std::string& what) : FormatError(what) {}
};

struct TruncatedPayload : FormatError {
  explicit TruncatedPayload(const std::string& what) : FormatError(what) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

struct DegenerateLandmarks : Error {
  explicit DegenerateLandmarks(const std::string& what) : Error("degenerate", what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace facefit
