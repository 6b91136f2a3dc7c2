#pragma once

#include <stdexcept>
#include <string>

namespace gdfm {

// Coarse failure classes. The command-line front end maps these onto exit
// codes (config 2, data 3, numerical 4).
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  virtual const char* tag() const noexcept { return "error"; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
  const char* tag() const noexcept override { return "config_error"; }
};

// Invalid arguments handed to a library routine (bad dimensions, r = 0, ...).
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::config, what) {}
  const char* tag() const noexcept override { return "input_error"; }
};

// The final LASSO fit selected no column at the requested penalty.
class EmptySelectionError : public InputError {
 public:
  using InputError::InputError;
  const char* tag() const noexcept override { return "empty_selection"; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(ErrorKind::data, what + " (row " + std::to_string(row) + ", column " +
                                   std::to_string(column) + ")"),
        row_(row),
        column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }
  const char* tag() const noexcept override { return "parse_error"; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what) : Error(ErrorKind::data, what) {}
  const char* tag() const noexcept override { return "structural_error"; }
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::data, what) {}
  const char* tag() const noexcept override { return "domain_error"; }
};

class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, long numerical_rank)
      : Error(ErrorKind::numerical, what), rank_(numerical_rank) {}
  long numerical_rank() const noexcept { return rank_; }
  const char* tag() const noexcept override { return "rank_deficiency"; }

 private:
  long rank_;
};

class SingularDesignError : public Error {
 public:
  explicit SingularDesignError(const std::string& what) : Error(ErrorKind::numerical, what) {}
  const char* tag() const noexcept override { return "singular_design"; }
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double kkt_violation)
      : Error(ErrorKind::numerical, what), kkt_violation_(kkt_violation) {}
  double kkt_violation() const noexcept { return kkt_violation_; }
  const char* tag() const noexcept override { return "convergence"; }

 private:
  double kkt_violation_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
  const char* tag() const noexcept override { return "numerical_error"; }
};

}  // namespace gdfm
