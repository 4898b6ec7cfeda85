#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace discard {

/// Base for every data or estimation failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number (0 when not tied to a line).
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& what)
      : Error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

/// The logistic fit stopped without converging. The last iterate is kept for diagnostics.
class FitError : public EstimationError {
 public:
  FitError(const std::string& what, double d50_cm, double b_slope)
      : EstimationError(what), d50_cm_(d50_cm), b_slope_(b_slope) {}

  double d50_cm() const noexcept { return d50_cm_; }
  double b_slope() const noexcept { return b_slope_; }

 private:
  double d50_cm_;
  double b_slope_;
};

/// Too many Monte Carlo draws failed to produce an estimate.
class UnstableError : public Error {
 public:
  UnstableError(const std::string& what, std::size_t n_failed, std::size_t n_total)
      : Error(what), n_failed_(n_failed), n_total_(n_total) {}

  std::size_t n_failed() const noexcept { return n_failed_; }
  std::size_t n_total() const noexcept { return n_total_; }

 private:
  std::size_t n_failed_;
  std::size_t n_total_;
};

}  // namespace discard
