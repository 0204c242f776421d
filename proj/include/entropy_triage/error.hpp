#pragma once

#include <stdexcept>
#include <string>

namespace entropy_triage {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI to pick an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error("parse", line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error("range", what) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error("capacity", what) {}
};

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& what) : Error("template", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

/// Backend transport failure that survived the retry policy.
class GatewayError : public Error {
 public:
  explicit GatewayError(const std::string& what) : Error("gateway", what) {}
};

/// Raised by backends for a single failed request; the gateway retries these.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what, bool retryable = true)
      : Error("transport", what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what) : Error("degenerate", what) {}
};

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what) : Error("singular", what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what) : Error("structural", what) {}
};

}  // namespace entropy_triage
