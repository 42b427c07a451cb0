#pragma once

// Little-endian stream helpers shared by the sample and checkpoint formats.

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "qxfer/error.hpp"

namespace qxfer::detail {

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<char, sizeof(T)> raw;
    std::memcpy(raw.data(), &value, sizeof(T));
    std::reverse(raw.begin(), raw.end());
    std::memcpy(&value, raw.data(), sizeof(T));
  }
  return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  value = to_little(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError(std::string(what) + ": unexpected end of file");
  return to_little(value);
}

}  // namespace qxfer::detail
