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

#include "crossplan/error.h"

#include <iostream>
#include <mutex>
#include <utility>

namespace crossplan {
namespace {

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

LogSink& sink() {
  static LogSink s = [](LogLevel level, std::string_view message) {
    if (level == LogLevel::kWarning) std::cerr << "warning: " << message << '\n';
  };
  return s;
}

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIsolation: return "isolation";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kChecksum: return "checksum";
    case ErrorCode::kDiverged: return "diverged";
    case ErrorCode::kPhaseOrder: return "phase-order";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

LogSink set_log_sink(LogSink s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  return std::exchange(sink(), std::move(s));
}

void log_message(LogLevel level, std::string_view message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(level, message);
}

}  // namespace crossplan
