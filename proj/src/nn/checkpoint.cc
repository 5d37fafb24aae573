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

#include "crossplan/nn/checkpoint.h"

#include <charconv>
#include <cmath>
#include <unordered_map>

#include "crossplan/digest.h"
#include "crossplan/error.h"
#include "file_util.h"
#include "json.hpp"

namespace crossplan::nn {

using nlohmann::json;

void Checkpoint::load_into(const ParamList& params) const {
  std::unordered_map<std::string, const Parameter*> by_name;
  for (const Parameter& t : tensors) by_name[t.name] = &t;
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    require(it != by_name.end(), ErrorCode::kMalformed, "checkpoint lacks tensor " + p->name);
    const Parameter& t = *it->second;
    require(t.value.rows() == p->value.rows() && t.value.cols() == p->value.cols(), ErrorCode::kMalformed,
            "checkpoint shape differs for " + p->name);
    p->value = t.value;
    p->trainable = t.trainable;
    p->zero_grad();
  }
}

const Parameter* Checkpoint::find(const std::string& name) const {
  for (const Parameter& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  require(it != meta.end(), ErrorCode::kMalformed, "checkpoint metadata lacks '" + key + "'");
  return it->second;
}

int Checkpoint::meta_int(const std::string& key) const {
  const std::string& text = meta_at(key);
  int v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  require(res.ec == std::errc() && res.ptr == text.data() + text.size(), ErrorCode::kMalformed,
          "checkpoint metadata '" + key + "' is not an integer");
  return v;
}

double Checkpoint::meta_double(const std::string& key) const {
  const std::string& text = meta_at(key);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  require(res.ec == std::errc() && res.ptr == text.data() + text.size(), ErrorCode::kMalformed,
          "checkpoint metadata '" + key + "' is not a number");
  return v;
}

Checkpoint make_checkpoint(const ParamList& params, std::map<std::string, std::string> meta) {
  Checkpoint c;
  c.meta = std::move(meta);
  for (const Parameter* p : params) c.tensors.push_back(Parameter{p->name, p->value, Matrix(), p->trainable});
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json tensors = json::array();
  for (const Parameter& t : ckpt.tensors) {
    std::vector<double> values(t.value.data(), t.value.data() + t.value.size());
    for (double v : values) {
      require(std::isfinite(v), ErrorCode::kDiverged, "non-finite value in tensor " + t.name);
    }
    tensors.push_back({{"name", t.name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"trainable", t.trainable},
                       {"values", values}});
  }
  json meta = json::object();
  for (const auto& [k, v] : ckpt.meta) meta[k] = v;
  json doc = {{"format", "crossplan-checkpoint"},
              {"format_version", kCheckpointFormatVersion},
              {"meta", meta},
              {"tensors", tensors}};
  return doc.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    require(doc.at("format").get<std::string>() == "crossplan-checkpoint", ErrorCode::kMalformed,
            "not a checkpoint file");
    const int version = doc.at("format_version").get<int>();
    require(version == kCheckpointFormatVersion, ErrorCode::kVersionMismatch,
            "unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    for (const auto& [k, v] : doc.at("meta").items()) c.meta[k] = v.get<std::string>();
    for (const json& t : doc.at("tensors")) {
      const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      const auto values = t.at("values").get<std::vector<double>>();
      require(shape.size() == 2 && shape[0] >= 0 && shape[1] >= 0 &&
                  static_cast<std::size_t>(shape[0] * shape[1]) == values.size(),
              ErrorCode::kMalformed, "tensor value count does not match its shape");
      Matrix m(shape[0], shape[1]);
      std::copy(values.begin(), values.end(), m.data());
      c.tensors.push_back(Parameter{t.at("name").get<std::string>(), std::move(m), Matrix(),
                                    t.at("trainable").get<bool>()});
    }
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("malformed checkpoint: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  internal::write_file(path, serialize_checkpoint(ckpt), "checkpoint");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(internal::read_file(path, "checkpoint"));
}

std::string parameters_hash(const ParamList& params) {
  Sha256 sha;
  for (const Parameter* p : params) {
    sha.update(p->name);
    sha.update(std::string_view("\0", 1));
    const std::int64_t header[3] = {p->value.rows(), p->value.cols(), p->trainable ? 1 : 0};
    sha.update(std::as_bytes(std::span(header)));
    sha.update(std::as_bytes(std::span(p->value.data(), static_cast<std::size_t>(p->value.size()))));
  }
  return sha.hex();
}

}  // namespace crossplan::nn
