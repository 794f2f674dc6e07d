#ifndef NLNDE_ERRORS_HPP
#define NLNDE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nlnde {

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  explicit ParseError(const std::string& msg)
      : std::runtime_error(msg), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Incompatible tensor shapes.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called outside its contract (e.g. non-scalar loss,
// missing gradients, invalid gold tag sequence).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad user-supplied configuration (missing paths, unknown keys, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nlnde

#endif  // NLNDE_ERRORS_HPP
