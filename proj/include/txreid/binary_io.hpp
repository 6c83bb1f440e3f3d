#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "txreid/errors.hpp"

// Little-endian primitives shared by the binary file formats (TXF1 feature
// files, TXT1 tensor containers, TXM1 models). Doubles are stored as the
// little-endian bytes of their IEEE-754 bit pattern, so roundtrips are
// bit-exact.
namespace txreid::io {

inline void put_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline void put_i32(std::ostream& os, std::int32_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline std::uint8_t get_u8(std::istream& is) {
  const int c = is.get();
  if (c == std::char_traits<char>::eof()) throw FormatError("unexpected end of file");
  return static_cast<std::uint8_t>(c);
}

inline std::uint32_t get_u32(std::istream& is) {
  char b[4];
  if (!is.read(b, 4)) throw FormatError("unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  char b[8];
  if (!is.read(b, 8)) throw FormatError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline std::int32_t get_i32(std::istream& is) {
  return static_cast<std::int32_t>(get_u32(is));
}

inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

inline void put_magic(std::ostream& os, const char (&magic)[5]) {
  os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& what) {
  char b[4];
  if (!is.read(b, 4) || b[0] != magic[0] || b[1] != magic[1] || b[2] != magic[2] || b[3] != magic[3]) {
    throw FormatError(what + ": bad magic, expected " + magic);
  }
}

}  // namespace txreid::io
