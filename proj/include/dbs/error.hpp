#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace dbs {

enum class Errc {
  invalid_measurement,
  invalid_performance,
  budget_too_small,
  invalid_batch,
  empty_partition,
  dataset_too_small,
  configuration,
  invalid_step_size,
  empty_batch,
  invalid_baseline,
  baseline_not_found,
  io,
  parse,
  validation,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_measurement: return "invalid measurement";
    case Errc::invalid_performance: return "invalid performance";
    case Errc::budget_too_small: return "budget too small";
    case Errc::invalid_batch: return "invalid batch";
    case Errc::empty_partition: return "empty partition";
    case Errc::dataset_too_small: return "dataset too small";
    case Errc::configuration: return "configuration error";
    case Errc::invalid_step_size: return "invalid step size";
    case Errc::empty_batch: return "empty batch";
    case Errc::invalid_baseline: return "invalid baseline";
    case Errc::baseline_not_found: return "baseline not found";
    case Errc::io: return "i/o error";
    case Errc::parse: return "parse error";
    case Errc::validation: return "validation error";
  }
  return "unknown error";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Config text could not be parsed. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::string origin, std::size_t line, std::size_t column, const std::string& detail)
      : Error(Errc::parse, origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + detail),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A config value violates a domain invariant; field() is the dotted path to it.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& constraint)
      : Error(Errc::validation, field + ": " + constraint), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace dbs
