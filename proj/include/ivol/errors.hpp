#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivol {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input row. `line()` is 1-based and counts the header.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IncompleteDayError : public Error {
 public:
  IncompleteDayError(std::string date, std::size_t found, std::size_t expected)
      : Error("incomplete day " + date + ": " + std::to_string(found) + " bars, expected " +
              std::to_string(expected)),
        date_(std::move(date)) {}
  const std::string& date() const noexcept { return date_; }

 private:
  std::string date_;
};

class DuplicateBinError : public Error {
 public:
  DuplicateBinError(std::size_t line, const std::string& date, const std::string& bin)
      : Error("line " + std::to_string(line) + ": duplicate bin " + bin + " on " + date) {}
};

class ZeroDayError : public Error {
 public:
  explicit ZeroDayError(const std::string& date)
      : Error("day " + date + " has zero total dollar volume"), date_(date) {}
  const std::string& date() const { return date_; }

 private:
  std::string date_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent matrix/vector dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is numerically singular.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Non-finite likelihood or an unrepairable covariance during fitting.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ivol
