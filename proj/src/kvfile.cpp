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

#include "kicksense/kvfile.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "kicksense/error.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

KvFile KvFile::parse(std::istream& in, const std::string& source) {
  KvFile kv;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#' || text.front() == ';') continue;
    if (text.front() == '[') {
      require(text.back() == ']' && text.size() > 2, ErrorCode::Parse,
              source + ":" + std::to_string(line_no) + ": malformed section header");
      section = std::string(trim(text.substr(1, text.size() - 2)));
      continue;
    }
    const auto eq = text.find('=');
    require(eq != std::string_view::npos, ErrorCode::Parse,
            source + ":" + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(text.substr(0, eq));
    require(!key.empty(), ErrorCode::Parse,
            source + ":" + std::to_string(line_no) + ": empty key");
    const std::string qualified =
        section.empty() ? std::string(key) : section + "." + std::string(key);
    kv.set(qualified, std::string(trim(text.substr(eq + 1))));
  }
  return kv;
}

KvFile KvFile::load(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
  return parse(in, path);
}

void KvFile::set(const std::string& qualified_key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == qualified_key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(qualified_key, value);
}

std::optional<std::string> KvFile::get(const std::string& qualified_key) const {
  for (const auto& [k, v] : entries_) {
    if (k == qualified_key) return v;
  }
  return std::nullopt;
}

std::vector<std::pair<std::string, std::string>> KvFile::section(const std::string& name) const {
  std::vector<std::pair<std::string, std::string>> out;
  const std::string prefix = name + ".";
  for (const auto& [k, v] : entries_) {
    if (k.compare(0, prefix.size(), prefix) == 0) out.emplace_back(k.substr(prefix.size()), v);
  }
  return out;
}

void KvFile::write(std::ostream& out) const {
  std::string current;
  bool first = true;
  for (const auto& [k, v] : entries_) {
    const auto dot = k.find('.');
    const std::string section = dot == std::string::npos ? std::string() : k.substr(0, dot);
    const std::string key = dot == std::string::npos ? k : k.substr(dot + 1);
    if (first || section != current) {
      if (!first) out << '\n';
      if (!section.empty()) out << '[' << section << "]\n";
      current = section;
      first = false;
    }
    out << key << " = " << v << '\n';
  }
}

void KvFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open '" + path + "' for writing");
  write(out);
  require(static_cast<bool>(out), ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace kicksense
