// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "dsvoxel/errors.hpp"

namespace dsvoxel {

/// Little-endian buffer writer/reader used by every binary file format here
/// (checkpoints, depth maps, COLMAP models). Explicit byte assembly keeps the
/// formats stable regardless of host endianness.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void cstring(const std::string& s) {
    bytes(s.data(), s.size());
    buf_.push_back(0);
  }

  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class BinaryReader {
 public:
  BinaryReader(const std::uint8_t* data, std::size_t size, std::string origin)
      : data_(data), size_(size), origin_(std::move(origin)) {}
  explicit BinaryReader(const std::vector<std::uint8_t>& buf, std::string origin = "buffer")
      : BinaryReader(buf.data(), buf.size(), std::move(origin)) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == size_; }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string cstring() {
    std::string s;
    while (true) {
      need(1);
      const char c = static_cast<char>(data_[pos_++]);
      if (c == '\0') break;
      s.push_back(c);
    }
    return s;
  }

  void expect_end() const {
    if (!at_end()) {
      throw ParseError(origin_ + ": " + std::to_string(size_ - pos_) +
                       " trailing bytes at offset " + std::to_string(pos_));
    }
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_) {
      throw ParseError(origin_ + ": truncated at byte offset " + std::to_string(pos_) +
                       " (need " + std::to_string(n) + " more, have " +
                       std::to_string(size_ - pos_) + ")");
    }
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string origin_;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace dsvoxel
