#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace dqmor::detail {

// Shortest round-trip decimal form; keeps CSV/JSON text loss-free.
inline std::string format_double(double value) {
  char buffer[32];
  const std::to_chars_result result =
      std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace dqmor::detail
