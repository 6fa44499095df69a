// Copyright 2026 The ds2ta-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian byte buffers for the binary file formats.

#ifndef DS2TA_BINARY_IO_H_
#define DS2TA_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "ds2ta/error.h"

namespace ds2ta {

class ByteWriter {
 public:
  template <typename T>
  void Put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    buf_.insert(buf_.end(), bytes, bytes + sizeof(T));
  }
  void PutBytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void PutBytes(const std::vector<unsigned char>& b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  const std::vector<unsigned char>& bytes() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<unsigned char> buf_;
};

// Bounds-checked reader; every failure is a FormatError carrying the offset.
class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& data) : data_(data) {}

  template <typename T>
  T Get(const char* what) {
    Need(sizeof(T), what);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string GetString(std::size_t n, const char* what) {
    Need(n, what);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  const unsigned char* Take(std::size_t n, const char* what) {
    Need(n, what);
    const unsigned char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  void Need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) {
      throw FormatError(std::string("truncated file while reading ") + what, pos_);
    }
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::vector<unsigned char>& data_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> ReadFileBytes(const std::string& path);

// Writes to `path + ".tmp"` then renames over `path`.
void WriteFileAtomic(const std::string& path, const std::vector<unsigned char>& bytes);
void WriteFileAtomic(const std::string& path, std::string_view text);

}  // namespace ds2ta

#endif  // DS2TA_BINARY_IO_H_
