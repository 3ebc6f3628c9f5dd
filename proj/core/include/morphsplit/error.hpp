#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morphsplit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A corpus line that does not follow the `surface<TAB>morphemes` layout.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A segmentation whose morphemes do not concatenate to its surface.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Precondition violated by the caller (length mismatch, index out of range).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Operation undefined on its input (empty corpus, too few cells).
class DomainError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

// Requested more items than can exist (synthetic words, grid sets).
class CapacityError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class AdapterError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace morphsplit
