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

#include "ds2ta/config_text.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ds2ta/error.h"

namespace ds2ta {

namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

KeyValueText KeyValueText::Parse(std::string_view text) {
  KeyValueText kv;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = Trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv.Set(std::string(key), std::string(Trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValueText KeyValueText::ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

std::string KeyValueText::Serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

bool KeyValueText::Has(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return true;
  }
  return false;
}

void KeyValueText::Set(std::string key, std::string value) {
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void KeyValueText::SetDouble(std::string key, double v) { Set(std::move(key), FormatDouble(v)); }

void KeyValueText::SetDoubleList(std::string key, const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += FormatDouble(v[i]);
  }
  Set(std::move(key), s);
}

const std::string& KeyValueText::Get(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return e.second;
  }
  throw ConfigError("missing config key '" + std::string(key) + "'");
}

std::int64_t KeyValueText::GetInt(std::string_view key) const {
  const std::string& s = Get(key);
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + std::string(key) + "' is not an integer: " + s);
  }
  return v;
}

double KeyValueText::GetDouble(std::string_view key) const {
  const std::string& s = Get(key);
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + std::string(key) + "' is not a number: " + s);
  }
  return v;
}

bool KeyValueText::GetBool(std::string_view key) const {
  const std::string& s = Get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "' is not a boolean: " + s);
}

std::vector<double> KeyValueText::GetDoubleList(std::string_view key) const {
  const std::string& s = Get(key);
  std::vector<double> out;
  std::string_view rest = s;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = Trim(rest.substr(0, comma));
    double v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw ConfigError("config key '" + std::string(key) + "' has a bad list entry: " + s);
    }
    out.push_back(v);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  return out;
}

void KeyValueText::Merge(const KeyValueText& other) {
  for (const auto& [k, v] : other.entries_) Set(k, v);
}

}  // namespace ds2ta
