#include "revkf/scalar.hpp"

namespace boost::multiprecision {

namespace {

using Wide = number<cpp_bin_float<256, digit_base_2, void, std::int32_t>, et_off>;

}  // namespace

revkf::Extended sin(const revkf::Extended& x) {
  return revkf::Extended(sin(Wide(x)));
}

revkf::Extended cos(const revkf::Extended& x) {
  return revkf::Extended(cos(Wide(x)));
}

revkf::Extended log(const revkf::Extended& x) {
  return revkf::Extended(log(Wide(x)));
}

}  // namespace boost::multiprecision
