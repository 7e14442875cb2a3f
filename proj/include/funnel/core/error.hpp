#ifndef FUNNEL_CORE_ERROR_HPP
#define FUNNEL_CORE_ERROR_HPP

#include <limits>
#include <stdexcept>
#include <string>

namespace funnel {

enum class ErrorKind {
  domain,
  range,
  convergence,
  non_invertible,
  divergence,
  step_underflow,
  insufficient_data,
  escape,
  config,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::range: return "range";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::non_invertible: return "non_invertible";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::step_underflow: return "step_underflow";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::escape: return "escape";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library. `value()` carries the one number that
/// is useful to the caller for the given kind: the last residual for
/// convergence failures, the blow-up time for divergence, the escape iterate
/// for escapes. It is NaN otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double value = nan_value())
      : std::runtime_error(what), kind_(kind), value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }

 private:
  static constexpr double nan_value() {
    return std::numeric_limits<double>::quiet_NaN();
  }

  ErrorKind kind_;
  double value_;
};

[[noreturn]] inline void fail(
    ErrorKind kind, const std::string& what,
    double value = std::numeric_limits<double>::quiet_NaN()) {
  throw Error(kind, what, value);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace funnel

#endif  // FUNNEL_CORE_ERROR_HPP
