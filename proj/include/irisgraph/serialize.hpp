#pragma once

// Little-endian binary encoding used by the graph archive, pair-dataset and
// checkpoint formats. Byte-wise writes keep the files identical across
// platforms regardless of host endianness.

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "irisgraph/error.hpp"

namespace irisgraph {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(char(v)); }
  void u16(std::uint16_t v) { raw(v, 2); }
  void u32(std::uint32_t v) { raw(v, 4); }
  void u64(std::uint64_t v) { raw(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    if (s.size() > 0xffff) throw FormatError("string field too long");
    u16(std::uint16_t(s.size()));
    buf_.append(s);
  }
  void bytes(const char* data, std::size_t n) { buf_.append(data, n); }
  void magic(const char (&m)[9]) { buf_.append(m, 8); }

  const std::string& data() const { return buf_; }

  void write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot create file: " + path);
    out.write(buf_.data(), std::streamsize(buf_.size()));
    if (!out) throw FormatError("write failure: " + path);
  }

 private:
  void raw(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string bytes, std::string name)
      : buf_(std::move(bytes)), name_(std::move(name)) {}

  static ByteReader from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes), path);
  }

  std::uint8_t u8() { return std::uint8_t(take(1)[0]); }
  std::uint16_t u16() { return std::uint16_t(raw(2)); }
  std::uint32_t u32() { return std::uint32_t(raw(4)); }
  std::uint64_t u64() { return raw(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::size_t n = u16();
    const char* p = take(n);
    return std::string(p, n);
  }
  void expect_magic(const char (&m)[9]) {
    const char* p = take(8);
    if (std::string_view(p, 8) != std::string_view(m, 8))
      throw FormatError(name_ + ": bad magic (expected " + std::string(m) + ")");
  }
  bool at_end() const { return pos_ == buf_.size(); }
  const std::string& name() const { return name_; }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > buf_.size()) throw FormatError(name_ + ": truncated file");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t raw(int n) {
    const char* p = take(std::size_t(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(std::uint8_t(p[i])) << (8 * i);
    return v;
  }

  std::string buf_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace irisgraph
