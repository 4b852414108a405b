#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seld {

// Base of every error raised by the library. `kind()` is a stable short
// identifier used in machine-readable error summaries.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SELD_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

SELD_DEFINE_ERROR(InvalidDirection)
SELD_DEFINE_ERROR(DegenerateMean)
SELD_DEFINE_ERROR(UnknownClass)
SELD_DEFINE_ERROR(InvalidInterval)
SELD_DEFINE_ERROR(ConfigError)
SELD_DEFINE_ERROR(LengthMismatch)
SELD_DEFINE_ERROR(EmptyReference)
SELD_DEFINE_ERROR(Undefined)
SELD_DEFINE_ERROR(TooFewFiles)
SELD_DEFINE_ERROR(UndefinedPartial)
SELD_DEFINE_ERROR(UndefinedValue)
SELD_DEFINE_ERROR(DegenerateRanks)
SELD_DEFINE_ERROR(MissingPair)
SELD_DEFINE_ERROR(IoError)

#undef SELD_DEFINE_ERROR

// Malformed text input. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error("ParseError",
              source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace seld
