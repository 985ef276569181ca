#pragma once

// Little-endian primitive readers/writers shared by the weight and dataset
// containers.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dsnn::io {

/// Malformed or truncated container. Carries the byte offset where reading failed.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &what, std::uint64_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

private:
  std::uint64_t offset_;
};

template <typename UInt> void put_le(std::ostream &os, UInt v) {
  char buf[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i)
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, sizeof(UInt));
}

inline void put_f32(std::ostream &os, float v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream &os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

/// Sequential reader that tracks its offset for error messages.
class Reader {
public:
  explicit Reader(std::istream &is) : is_(is) {}

  std::uint64_t offset() const { return offset_; }

  void bytes(char *dst, std::size_t n, const char *what) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw ParseError(std::string("truncated while reading ") + what, offset_ + is_.gcount());
    offset_ += n;
  }

  template <typename UInt> UInt le(const char *what) {
    unsigned char buf[sizeof(UInt)];
    bytes(reinterpret_cast<char *>(buf), sizeof(UInt), what);
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(buf[i]) << (8 * i);
    return v;
  }

  float f32(const char *what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }
  double f64(const char *what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }

private:
  std::istream &is_;
  std::uint64_t offset_ = 0;
};

} // namespace dsnn::io
