#ifndef SQO_HARNESS_FORMAT_HPP
#define SQO_HARNESS_FORMAT_HPP

#include <array>
#include <charconv>
#include <string>

#include "sqo/errors.hpp"

namespace sqo::harness {

// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (res.ec != std::errc{}) throw NumericalError("cannot format double");
  return std::string(buf.data(), res.ptr);
}

}  // namespace sqo::harness

#endif  // SQO_HARNESS_FORMAT_HPP
