#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfcert {

/// Failure category; doubles as the CLI process exit code.
enum class ErrorCategory { validation = 2, io = 3, runtime = 4, bound = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

/// Malformed expression source; offset is the 0-based byte position.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& what)
      : Error(ErrorCategory::validation,
              what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Identifier not present in the symbol table (or missing from bindings).
class UnknownIdentifier : public Error {
 public:
  explicit UnknownIdentifier(const std::string& name)
      : Error(ErrorCategory::validation, "unknown identifier '" + name + "'"),
        name_(name) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class DivisionByZero : public Error {
 public:
  DivisionByZero() : Error(ErrorCategory::runtime, "division by zero") {}
};

/// Non-integer power of a negative base.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorCategory::runtime, what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class EmptyJumps : public Error {
 public:
  EmptyJumps()
      : Error(ErrorCategory::validation, "model must declare at least one jump") {}
};

class UnknownModel : public Error {
 public:
  explicit UnknownModel(const std::string& name)
      : Error(ErrorCategory::validation, "unknown builtin model '" + name + "'") {}
};

class MissingParam : public Error {
 public:
  explicit MissingParam(const std::string& name)
      : Error(ErrorCategory::validation, "missing parameter '" + name + "'") {}
};

class OutOfDomain : public Error {
 public:
  explicit OutOfDomain(const std::string& what)
      : Error(ErrorCategory::runtime, what) {}
};

class NegativeRate : public Error {
 public:
  explicit NegativeRate(const std::string& what)
      : Error(ErrorCategory::runtime, what) {}
};

/// Initial state not representable on the 1/n lattice inside the domain.
class OffLattice : public Error {
 public:
  explicit OffLattice(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

/// A jump left the domain box during simulation.
class Escape : public Error {
 public:
  explicit Escape(const std::string& what)
      : Error(ErrorCategory::runtime, what) {}
};

class GridMismatch : public Error {
 public:
  explicit GridMismatch(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class NonFinite : public Error {
 public:
  explicit NonFinite(const std::string& what)
      : Error(ErrorCategory::runtime, what) {}
};

class BoundViolated : public Error {
 public:
  explicit BoundViolated(const std::string& what)
      : Error(ErrorCategory::bound, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

}  // namespace mfcert
