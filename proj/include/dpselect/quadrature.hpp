#pragma once

// Thin wrapper around adaptive Gauss-Kronrod integration that surfaces the
// error estimate and turns silent non-convergence into an exception.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

namespace dpselect {
namespace detail {

inline std::string format_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace detail

// Thrown when a numerical integral cannot be trusted to the requested
// accuracy (non-finite result or error estimate above tolerance).
class QuadratureError : public std::runtime_error {
 public:
  explicit QuadratureError(const std::string& what)
      : std::runtime_error(what) {}
};

struct QuadratureResult {
  double value;
  double error;  // estimated absolute error of `value`
};

// Integrates f over [lo, hi] with a 15-point Gauss-Kronrod rule and adaptive
// bisection, returning the value together with its error estimate.  Callers
// that aggregate several segments can sum both fields and apply their own
// convergence policy.
template <typename F>
QuadratureResult integrate(F&& f, double lo, double hi) {
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
          std::forward<F>(f), lo, hi, /*max_depth=*/15, /*tol=*/1e-10, &err);
  return {value, err};
}

// As integrate(), but throws QuadratureError unless the result is finite and
// the error estimate is within abs_tol.
template <typename F>
double integrate_checked(F&& f, double lo, double hi, double abs_tol) {
  const QuadratureResult r = integrate(std::forward<F>(f), lo, hi);
  if (!std::isfinite(r.value) || !std::isfinite(r.error))
    throw QuadratureError("integral is not finite on [" +
                          detail::format_sci(lo) + ", " +
                          detail::format_sci(hi) + "]");
  if (r.error > abs_tol)
    throw QuadratureError("integral error estimate " +
                          detail::format_sci(r.error) +
                          " exceeds tolerance " + detail::format_sci(abs_tol));
  return r.value;
}

}  // namespace dpselect
