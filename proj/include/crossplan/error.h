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

#ifndef CROSSPLAN_ERROR_H_
#define CROSSPLAN_ERROR_H_

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace crossplan {

/// Error categories. The numeric values are part of the C API.
enum class ErrorCode : int {
  kOk = 0,
  kValidation = 1,
  kIsolation = 2,
  kDegenerateInput = 3,
  kIo = 4,
  kMalformed = 5,
  kVersionMismatch = 6,
  kChecksum = 7,
  kDiverged = 8,
  kPhaseOrder = 9,
  kInternal = 10,
};

std::string_view error_code_name(ErrorCode code);

/// All failures raised by the library carry an ErrorCode.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

enum class LogLevel { kInfo, kWarning };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Replaces the process-wide log sink (default: stderr, warnings only).
/// Returns the previous sink.
LogSink set_log_sink(LogSink sink);
void log_message(LogLevel level, std::string_view message);

}  // namespace crossplan

#endif  // CROSSPLAN_ERROR_H_
