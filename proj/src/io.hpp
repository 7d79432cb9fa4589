// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_IO_HPP
#define BEAMSIM_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

// Little-endian raw binary helpers for the project's file formats.
static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are not supported");

namespace beamsim::io {

inline void write_bytes(std::ostream& os, const void* data, size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!os) throw std::runtime_error("write failed");
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  write_bytes(os, &v, sizeof(T));
}

inline void read_bytes(std::istream& is, void* data, size_t n) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n) throw std::runtime_error("unexpected end of file");
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  read_bytes(is, &v, sizeof(T));
  return v;
}

inline void write_magic(std::ostream& os, std::string_view magic) {
  write_bytes(os, magic.data(), magic.size());
}

inline void expect_magic(std::istream& is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  read_bytes(is, got.data(), got.size());
  if (got != magic) throw std::runtime_error("bad magic bytes (wrong file type?)");
}

// Length-prefixed text block (u32 length + bytes).
inline void write_text_block(std::ostream& os, const std::string& text) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
  write_bytes(os, text.data(), text.size());
}

inline std::string read_text_block(std::istream& is) {
  auto len = read_pod<std::uint32_t>(is);
  if (len > (1u << 24)) throw std::runtime_error("header block too large");
  std::string text(len, '\0');
  read_bytes(is, text.data(), len);
  return text;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace beamsim::io

#endif
