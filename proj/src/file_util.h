// Copyright 2026 The Crossplan Authors
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

#ifndef CROSSPLAN_SRC_FILE_UTIL_H_
#define CROSSPLAN_SRC_FILE_UTIL_H_

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "crossplan/error.h"

namespace crossplan::internal {

inline std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, std::string("cannot open ") + what + ": " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text, const char* what) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, std::string("cannot write ") + what + ": " + path.string());
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::kIo, std::string("failed writing ") + what + ": " + path.string());
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  require(res.ec == std::errc() && res.ptr == text.data() + text.size(), ErrorCode::kValidation,
          "not a number for " + what + ": '" + text + "'");
  return v;
}

}  // namespace crossplan::internal

#endif  // CROSSPLAN_SRC_FILE_UTIL_H_
