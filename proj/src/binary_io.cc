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

#include "ds2ta/binary_io.h"

#include <cstdio>
#include <fstream>
#include <iterator>

namespace ds2ta {

std::vector<unsigned char> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PathError("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

namespace {

void WriteRaw(const std::string& path, const char* data, std::size_t n) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PathError("cannot write " + tmp);
    out.write(data, static_cast<std::streamsize>(n));
    if (!out) throw PathError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw PathError("cannot rename " + tmp + " to " + path);
  }
}

}  // namespace

void WriteFileAtomic(const std::string& path, const std::vector<unsigned char>& bytes) {
  WriteRaw(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void WriteFileAtomic(const std::string& path, std::string_view text) {
  WriteRaw(path, text.data(), text.size());
}

}  // namespace ds2ta
