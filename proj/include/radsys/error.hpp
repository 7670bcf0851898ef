#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace radsys {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t position, std::vector<std::string> expected = {})
      : Error(format(message, position, expected)),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  static std::string format(const std::string& message, std::size_t position,
                            const std::vector<std::string>& expected) {
    std::string out = message + " at position " + std::to_string(position);
    if (!expected.empty()) {
      out += " (expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) out += ", ";
        out += expected[i];
      }
      out += ")";
    }
    return out;
  }

  std::size_t position_;
  std::vector<std::string> expected_;
};

class UnknownVariableError : public ParseError {
 public:
  UnknownVariableError(const std::string& name, std::size_t position)
      : ParseError("unknown variable '" + name + "'", position), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ArityError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Evaluation outside the real-valued domain of an expression (log of a
// nonpositive number, division by zero, overflow, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// F^{-1} asked for a value at or above F(infinity).
class RangeError : public Error {
 public:
  using Error::Error;
};

// A structural property of the construction was violated numerically.
class InternalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : Error(path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace radsys
