#pragma once

#include <stdexcept>
#include <string>

namespace bcplink {

// input file could not be parsed; line numbers are 1-based
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& origin, int line, const std::string& what)
      : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what),
        m_origin(origin),
        m_line(line) {}

  const std::string& origin() const { return m_origin; }
  int line() const { return m_line; }

 private:
  std::string m_origin;
  int m_line;
};

// a computation has no physical answer for the given inputs
class physics_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// stability factor is undefined because the network has no reverse path
class unilateral_error : public physics_error {
 public:
  using physics_error::physics_error;
};

// simultaneous conjugate match does not exist (K < 1)
class no_match_error : public physics_error {
 public:
  using physics_error::physics_error;
};

// file could not be opened, read, or written
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bcplink
