// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>
#include <type_traits>

#include "lidarworld/core/error.hpp"

namespace lidarworld::binio {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

template <typename T>
  requires std::is_arithmetic_v<T>
void write(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
  requires std::is_arithmetic_v<T>
T read(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw FormatError("unexpected end of binary stream");
  return value;
}

template <typename T>
void write_array(std::ostream& os, const T* data, std::size_t count) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_array(std::istream& is, T* data, std::size_t count) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!is) throw FormatError("unexpected end of binary stream");
}

inline void write_magic(std::ostream& os, std::string_view magic) { os.write(magic.data(), 4); }

inline void expect_magic(std::istream& is, std::string_view magic) {
  std::array<char, 4> buf{};
  is.read(buf.data(), 4);
  if (!is || std::string_view(buf.data(), 4) != magic)
    throw FormatError("bad magic, expected \"" + std::string(magic) + "\"");
}

/// All containers carry this version after the magic.
inline constexpr std::uint32_t kContainerVersion = 1;

inline void expect_version(std::istream& is) {
  const auto v = read<std::uint32_t>(is);
  if (v != kContainerVersion) throw FormatError("unsupported container version " + std::to_string(v));
}

}  // namespace lidarworld::binio
