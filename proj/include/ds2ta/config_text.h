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

// Canonical key-value text used for config files and the config blob inside
// checkpoints. One `key = value` per line; `#` starts a comment; lists are
// comma separated. Serialization emits keys in insertion order with doubles
// printed in shortest round-trip form, so a config always serializes to the
// same bytes.

#ifndef DS2TA_CONFIG_TEXT_H_
#define DS2TA_CONFIG_TEXT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ds2ta {

class KeyValueText {
 public:
  static KeyValueText Parse(std::string_view text);
  static KeyValueText ReadFile(const std::string& path);

  std::string Serialize() const;

  bool Has(std::string_view key) const;
  void Set(std::string key, std::string value);
  void SetInt(std::string key, std::int64_t v) { Set(std::move(key), std::to_string(v)); }
  void SetDouble(std::string key, double v);
  void SetBool(std::string key, bool v) { Set(std::move(key), v ? "true" : "false"); }
  void SetDoubleList(std::string key, const std::vector<double>& v);

  const std::string& Get(std::string_view key) const;
  std::int64_t GetInt(std::string_view key) const;
  double GetDouble(std::string_view key) const;
  bool GetBool(std::string_view key) const;
  std::vector<double> GetDoubleList(std::string_view key) const;

  // Copies every entry of `other` over this one (later wins).
  void Merge(const KeyValueText& other);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string FormatDouble(double v);

}  // namespace ds2ta

#endif  // DS2TA_CONFIG_TEXT_H_
