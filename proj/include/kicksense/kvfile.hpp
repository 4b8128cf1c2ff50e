/*
 * Copyright 2026 The KickSense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kicksense {

// Flat key-value text with [section] headers. Keys are addressed as
// "section.key"; '#' starts a comment line. Entry order is preserved.
class KvFile {
 public:
  static KvFile parse(std::istream& in, const std::string& source = "<input>");
  static KvFile load(const std::string& path);

  void set(const std::string& qualified_key, const std::string& value);
  std::optional<std::string> get(const std::string& qualified_key) const;
  bool contains(const std::string& qualified_key) const { return get(qualified_key).has_value(); }

  // Keys of one section, in file order, without the section prefix.
  std::vector<std::pair<std::string, std::string>> section(const std::string& name) const;

  void write(std::ostream& out) const;
  void save(const std::string& path) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace kicksense
