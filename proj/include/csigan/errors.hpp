#pragma once

#include <stdexcept>
#include <string>

namespace csigan {

/// Failure modes when reading the binary interchange formats (CSIT datasets and
/// WGCK checkpoints). Each one maps to its own code so callers can tell a wrong
/// file apart from a damaged one.
enum class FormatErrc {
  open_failed,
  bad_magic,
  version_mismatch,
  truncated,
  length_mismatch,
  malformed,
};

inline const char *to_string(FormatErrc code) {
  switch (code) {
  case FormatErrc::open_failed: return "open_failed";
  case FormatErrc::bad_magic: return "bad_magic";
  case FormatErrc::version_mismatch: return "version_mismatch";
  case FormatErrc::truncated: return "truncated";
  case FormatErrc::length_mismatch: return "length_mismatch";
  case FormatErrc::malformed: return "malformed";
  }
  return "unknown";
}

class FormatError : public std::runtime_error {
public:
  FormatError(FormatErrc code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] FormatErrc code() const noexcept { return code_; }

private:
  FormatErrc code_;
};

/// A config file or command-line value could not be understood.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string &what)
      : std::runtime_error(what), key_(std::move(key)) {}

  [[nodiscard]] const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

/// The correlation matrix carries no usable signal energy.
class NoSignalError : public std::domain_error {
  using std::domain_error::domain_error;
};

/// The selected root maps to |sin(azimuth)| > 1.
class AmbiguousAngleError : public std::domain_error {
  using std::domain_error::domain_error;
};

/// A train/test split produced an empty side.
class EmptySplitError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A query fell outside the triangulated region and the fallback policy forbids
/// extrapolation.
class OutsideHullError : public std::domain_error {
  using std::domain_error::domain_error;
};

/// Training produced a non-finite loss.
class NumericalAbort : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace csigan
