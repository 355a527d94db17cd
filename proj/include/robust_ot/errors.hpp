#ifndef ROBUST_OT_ERRORS_HPP_
#define ROBUST_OT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace robust_ot {

// Input files that fail to parse (CSV/JSON). CLI exit code 2.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension / shape mismatches between inputs. CLI exit code 3.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver failed to reach its required iteration count or produced
// non-finite intermediates. CLI exit code 4.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid solver configuration (bad tau/epsilon/eta, max_iter too small,
// theorem schedule on non-probability inputs, ...). CLI exit code 5.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Measures with zero or negative weights are rejected distinctly so callers
// can opt into smoothing instead.
class NonPositiveWeightError : public std::domain_error {
 public:
  explicit NonPositiveWeightError(const std::string& msg)
      : std::domain_error(msg) {}
};

}  // namespace robust_ot

#endif  // ROBUST_OT_ERRORS_HPP_
