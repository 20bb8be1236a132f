#pragma once

#include <stdexcept>
#include <string>

namespace nsm {

// Exit-code taxonomy shared by the library and the nsmlab tool.
enum class ExitCode : int {
  success = 0,
  config = 2,
  regime = 3,
  accuracy = 4,
  io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid input: bad geometry, malformed or out-of-range configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

/// A quantity left the range where the quadratic self-gravity form holds.
class RegimeError : public Error {
 public:
  explicit RegimeError(const std::string& what) : Error(ExitCode::regime, what) {}
};

/// Quadrature did not converge, integrator drifted, wavepacket hit the grid edge.
class AccuracyError : public Error {
 public:
  explicit AccuracyError(const std::string& what) : Error(ExitCode::accuracy, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::io, what) {}
};

}  // namespace nsm
