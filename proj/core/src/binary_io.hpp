#pragma once

// Little-endian primitives shared by the weight and tree file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "vcc/error.hpp"

namespace vcc::detail {

template <typename U>
void write_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U read_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(U)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw IoError(std::string("unexpected end of file reading ") + what);
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

inline void write_f64(std::ostream& out, double v) {
  write_le(out, std::bit_cast<std::uint64_t>(v));
}

inline double read_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(read_le<std::uint64_t>(in, what));
}

template <typename T>
void write_reals(std::ostream& out, std::span<const T> values) {
  for (T v : values) write_f64(out, static_cast<double>(v));
}

template <typename T>
void read_reals(std::istream& in, std::span<T> values, const char* what) {
  for (T& v : values) v = static_cast<T>(read_f64(in, what));
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) {
  out.write(magic, 4);
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  std::array<char, 4> got{};
  in.read(got.data(), 4);
  if (!in || std::string(got.data(), 4) != std::string(magic, 4)) {
    throw IoError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace vcc::detail
