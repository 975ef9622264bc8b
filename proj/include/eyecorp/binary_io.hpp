#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include <fmt/format.h>

#include "eyecorp/error.hpp"

namespace eyecorp::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
 public:
  template <class T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&value);
    buffer_.append(p, sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) { buffer_.append(static_cast<const char*>(data), n); }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    buffer_.append(s);
  }
  const std::string& bytes() const { return buffer_; }

 private:
  std::string buffer_;
};

/// Bounds-checked reader; every failure reports the byte offset.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

  template <class T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    get_bytes(&value, sizeof(T));
    return value;
  }
  void get_bytes(void* out, std::size_t n) {
    require(n);
    std::memcpy(out, data_.data() + offset_, n);
    offset_ += n;
  }
  std::string get_string(std::size_t max_len) {
    const auto n = get<std::uint32_t>();
    if (n > max_len) fail(fmt::format("string length {} exceeds limit {}", n, max_len));
    require(n);
    std::string s(data_.substr(offset_, n));
    offset_ += n;
    return s;
  }
  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return data_.size() - offset_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(fmt::format("{}: parse error at byte offset {}: {}", source_, offset_, what));
  }

 private:
  void require(std::size_t n) const {
    if (remaining() < n)
      fail(fmt::format("truncated input, need {} bytes but only {} remain", n, remaining()));
  }

  std::string_view data_;
  std::string source_;
  std::size_t offset_ = 0;
};

}  // namespace eyecorp::detail
