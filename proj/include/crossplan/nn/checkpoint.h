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

#ifndef CROSSPLAN_NN_CHECKPOINT_H_
#define CROSSPLAN_NN_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "crossplan/nn/layers.h"

namespace crossplan::nn {

inline constexpr int kCheckpointFormatVersion = 1;

/// Named tensors plus string metadata. Values round-trip bit-exactly.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<Parameter> tensors;

  /// Copies values and trainable flags into `params`, matched by name.
  /// Missing names or shape differences throw kMalformed.
  void load_into(const ParamList& params) const;
  const Parameter* find(const std::string& name) const;
  /// Metadata lookups; a missing or unparsable value throws kMalformed.
  const std::string& meta_at(const std::string& key) const;
  int meta_int(const std::string& key) const;
  double meta_double(const std::string& key) const;
};

Checkpoint make_checkpoint(const ParamList& params, std::map<std::string, std::string> meta = {});
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// SHA-256 over names, shapes, trainable flags and the raw value bytes.
std::string parameters_hash(const ParamList& params);

}  // namespace crossplan::nn

#endif  // CROSSPLAN_NN_CHECKPOINT_H_
