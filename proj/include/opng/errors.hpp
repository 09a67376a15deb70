#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opng {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (ARPA, manifest, lexicon). Carries a 1-based line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Malformed or truncated binary model file. `section` names the block
// that failed to decode ("header", "bigram block", ...).
class FormatError : public Error {
 public:
  FormatError(std::string section, const std::string& what)
      : Error(section + ": " + what), section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

class BuildError : public Error {
 public:
  BuildError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace opng
