#pragma once

// Scalar types the whole library is instantiated over. Every algorithm is a
// template on the scalar; precision only changes tolerances, never contracts.

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace revkf {

/// 53-bit mantissa.
using Real = double;

/// 160-bit mantissa, expression templates off so Eigen sees a plain value type.
using Extended = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<160, boost::multiprecision::digit_base_2, void, std::int32_t>,
    boost::multiprecision::et_off>;

}  // namespace revkf

// Boost's own sin, cos and log at 160 bits lose up to a few hundred ulp near
// their zeros. These non-template overloads win overload resolution against
// the library templates and evaluate through a 256-bit intermediate.
namespace boost::multiprecision {

revkf::Extended sin(const revkf::Extended& x);
revkf::Extended cos(const revkf::Extended& x);
revkf::Extended log(const revkf::Extended& x);

}  // namespace boost::multiprecision

namespace revkf {

enum class Precision { Double, Extended };

template <typename T>
inline constexpr int kMantissaBits = std::numeric_limits<T>::digits;

template <typename T>
T epsilon() {
  return std::numeric_limits<T>::epsilon();
}

template <typename T>
T pi() {
  return boost::math::constants::pi<T>();
}

template <typename T>
T two_pi() {
  return boost::math::constants::two_pi<T>();
}

/// Below this angle sin(a)/a and friends switch to truncated series: 2^(-p/2).
template <typename T>
T small_angle_threshold() {
  using std::ldexp;
  return ldexp(T(1), -(kMantissaBits<T> / 2));
}

template <typename T>
double to_double(const T& x) {
  if constexpr (std::is_same_v<T, double>) {
    return x;
  } else {
    return x.template convert_to<double>();
  }
}

/// Parses a decimal literal at full precision of T.
template <typename T>
T parse_scalar(std::string_view text) {
  if constexpr (std::is_same_v<T, double>) {
    return std::stod(std::string(text));
  } else {
    return T(std::string(text));
  }
}

/// Shortest text that round-trips through parse_scalar.
std::string format_scalar(double x);
std::string format_scalar(const Extended& x);

}  // namespace revkf
