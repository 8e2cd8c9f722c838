#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace renormlab {

// Software float with a 128-bit binary mantissa, used for the extended-precision
// instantiations of the numeric core. Expression templates are off so the type
// behaves like a plain scalar.
using f128 = boost::multiprecision::number<
    boost::multiprecision::backends::cpp_bin_float<
        128, boost::multiprecision::backends::digit_base_2>,
    boost::multiprecision::et_off>;

template <class S>
constexpr int precision_bits() {
  return std::numeric_limits<S>::digits;
}

template <class S>
S machine_eps() {
  return std::numeric_limits<S>::epsilon();
}

inline double to_double(double x) { return x; }
inline double to_double(const f128& x) { return x.convert_to<double>(); }

// Bisection step count that drives an interval of width 2 below one ulp.
template <class S>
int bisection_steps() {
  return std::numeric_limits<S>::digits + 8;
}

// Raised when an operation leaves its mathematical domain (orbit escape,
// missing entry within a horizon, degenerate pullback, ...).
struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised for malformed configuration or unparseable inputs.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace renormlab
