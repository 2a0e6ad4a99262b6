#pragma once

#include <stdexcept>
#include <string>

namespace qdim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Operation exists but the requested regime or variant is not supported.
class Unsupported : public Error {
 public:
  using Error::Error;
};

// An exhaustive enumeration would exceed its hard size limit.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// A search that a theorem guarantees to succeed came back empty.
class InternalContradiction : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace qdim
