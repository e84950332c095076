#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace osnlab {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Lookup of an id that does not exist in the queried structure.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// An edge with identical endpoints where the domain forbids one.
class SelfLoopError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant does not hold (corrupt or hand-built data).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or document; carries source name and line number.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& message)
      : Error(source + ":" + std::to_string(line) + ": " + message),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Unexpected HTTP status or transport failure on the client side.
class HttpError : public Error {
 public:
  HttpError(int status, const std::string& message)
      : Error(message), status_(status) {}

  int status() const { return status_; }

 private:
  int status_;
};

}  // namespace osnlab
