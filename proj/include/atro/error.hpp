#pragma once

#include <stdexcept>
#include <string>

namespace atro {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (dataset files, JSON documents).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A configuration value violates its contract. `path` names the field, e.g. "train.c".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + " " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Shapes of vectors, models or datasets disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or divergence during an iterative procedure.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace atro
