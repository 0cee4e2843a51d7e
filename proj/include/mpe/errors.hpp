#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace mpe {

/// Coarse error classes; the CLI maps each to an exit status.
enum class ErrorCategory { validation, numerical, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

template <ErrorCategory C>
class CategorizedError : public Error {
 public:
  explicit CategorizedError(const std::string& what) : Error(C, what) {}
};

using ValidationFailure = CategorizedError<ErrorCategory::validation>;
using NumericalFailure = CategorizedError<ErrorCategory::numerical>;

struct InvalidResolution : ValidationFailure { using ValidationFailure::ValidationFailure; };
struct OutOfRange : ValidationFailure { using ValidationFailure::ValidationFailure; };
struct ShapeMismatch : ValidationFailure { using ValidationFailure::ValidationFailure; };
struct UnknownBC : ValidationFailure { using ValidationFailure::ValidationFailure; };
struct EmptySeries : ValidationFailure { using ValidationFailure::ValidationFailure; };
struct LengthMismatch : ValidationFailure { using ValidationFailure::ValidationFailure; };
struct InsufficientMembers : ValidationFailure { using ValidationFailure::ValidationFailure; };

struct ConstraintViolated : NumericalFailure { using NumericalFailure::NumericalFailure; };
struct CflViolation : NumericalFailure { using NumericalFailure::NumericalFailure; };
struct EllipticDivergence : NumericalFailure { using NumericalFailure::NumericalFailure; };
struct NonFinite : NumericalFailure { using NumericalFailure::NumericalFailure; };
struct SingularSystem : NumericalFailure { using NumericalFailure::NumericalFailure; };

struct IoError : CategorizedError<ErrorCategory::io> {
  using CategorizedError<ErrorCategory::io>::CategorizedError;
};

class ParseError : public ValidationFailure {
 public:
  ParseError(int line, const std::string& what)
      : ValidationFailure("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ValidationError : public ValidationFailure {
 public:
  ValidationError(std::string key, const std::string& what)
      : ValidationFailure(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Short %g rendering for error messages.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace mpe
