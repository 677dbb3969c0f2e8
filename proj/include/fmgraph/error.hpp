#pragma once

#include <stdexcept>
#include <string>

namespace fmgraph {

/// Broad failure category. The CLI maps each kind onto its own exit code.
enum class ErrorKind {
  invalid_argument,  // bad parameter or configuration
  data,              // malformed input, shape mismatch, I/O failure
  convergence        // iterative method failed or diverged
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::invalid_argument, what) {}
};

/// Raised when a size precondition fails (too few samples, k > n, ...).
class SizeError : public InvalidArgument {
 public:
  explicit SizeError(const std::string& what) : InvalidArgument(what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class DimensionMismatch : public DataError {
 public:
  explicit DimensionMismatch(const std::string& what) : DataError(what) {}
};

/// Parse failure with a location (1-based line, optional 1-based column).
class ParseError : public DataError {
 public:
  ParseError(const std::string& source, long line, long column,
             const std::string& what)
      : DataError(format(source, line, column, what)),
        line_(line),
        column_(column) {}

  long line() const noexcept { return line_; }
  long column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& source, long line, long column,
                            const std::string& what) {
    std::string out = source;
    if (line > 0) out += ":" + std::to_string(line);
    if (column > 0) out += ":" + std::to_string(column);
    return out + ": " + what;
  }

  long line_;
  long column_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, long iterations)
      : Error(ErrorKind::convergence,
              what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}

  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

/// The objective became non-finite during descent.
class DivergenceError : public ConvergenceError {
 public:
  explicit DivergenceError(long iteration)
      : ConvergenceError("objective diverged at iteration " +
                             std::to_string(iteration),
                         iteration) {}
};

}  // namespace fmgraph
