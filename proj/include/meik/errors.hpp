#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace meik {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error while parsing an expression. Carries the byte offset of the
/// offending token and the set of token categories that would have been valid.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t offset,
             std::vector<std::string> expected)
      : Error(format(msg, offset, expected)),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  static std::string format(const std::string& msg, std::size_t offset,
                            const std::vector<std::string>& expected);

  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// An identifier that is not in the declared variable list.
class UnknownVariable : public ParseError {
 public:
  UnknownVariable(const std::string& name, std::size_t offset)
      : ParseError("unknown variable '" + name + "'", offset, {}),
        name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// A call to a function that is not in the builtin set.
class UnknownFunction : public ParseError {
 public:
  UnknownFunction(const std::string& name, std::size_t offset)
      : ParseError("unknown function '" + name + "'", offset, {}),
        name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Evaluation left the real domain (ln of a non-positive value, abs at 0,
/// an inverse branch queried outside its interval, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A custom F family was asked for its inverse but none was supplied.
class NoInverse : public Error {
 public:
  using Error::Error;
};

/// F(c0) < 0: no real linear solution exists.
class NegativeF : public Error {
 public:
  using Error::Error;
};

/// No Newton seed converged for the stationarity system.
class NoRoot : public Error {
 public:
  using Error::Error;
};

/// Jacobian condition number exceeded the configured bound (caustic proximity).
class SingularJacobian : public Error {
 public:
  using Error::Error;
};

/// Root tracking failed to stay on one envelope sheet across a stencil.
class BranchJump : public Error {
 public:
  using Error::Error;
};

/// A field or coefficient evaluation failed for a reason other than a branch jump.
class EvalFailure : public Error {
 public:
  using Error::Error;
};

/// Flow requested for a generator whose flow is not a closed-form affine map.
class NonAffineGenerator : public Error {
 public:
  using Error::Error;
};

/// Scenario file invalid; the message names the offending field.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace meik
