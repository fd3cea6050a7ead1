#pragma once

#include <stdexcept>
#include <string>

namespace wspd {

// Error classes map 1:1 onto CLI exit codes (see tools/main.cpp).
enum class ErrorKind { config, domain, convergence, inconsistency };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(ErrorKind::convergence, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class InconsistencyError : public Error {
 public:
  explicit InconsistencyError(const std::string& what) : Error(ErrorKind::inconsistency, what) {}
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace wspd
