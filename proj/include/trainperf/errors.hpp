#pragma once

#include <stdexcept>
#include <string>

namespace trainperf {

/// Root of every domain error the library raises. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A NetworkSpec invariant does not hold. Carries the rule name and the offending layer.
class ValidationError : public Error {
 public:
  ValidationError(std::string rule, std::string layer_id, const std::string& detail = {})
      : Error("validation failed (" + rule + ") at layer '" + layer_id + "'" +
              (detail.empty() ? std::string{} : ": " + detail)),
        rule_(std::move(rule)),
        layer_id_(std::move(layer_id)) {}

  const std::string& rule() const noexcept { return rule_; }
  const std::string& layer_id() const noexcept { return layer_id_; }

 private:
  std::string rule_;
  std::string layer_id_;
};

class PruneError : public Error {
 public:
  using Error::Error;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

class CsvError : public Error {
 public:
  CsvError(std::size_t row, const std::string& what)
      : Error("csv row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class JoinError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace trainperf
