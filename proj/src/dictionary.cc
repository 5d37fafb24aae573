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

#include "crossplan/dictionary.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "crossplan/digest.h"
#include "crossplan/error.h"
#include "crossplan/kmeans.h"
#include "crossplan/rng.h"
#include "json.hpp"

namespace crossplan {
namespace {

using nlohmann::json;

Matrix flatten_rows(const std::vector<const Trajectory*>& trajs) {
  const Eigen::Index d = static_cast<Eigen::Index>(2 * trajs.front()->points.size());
  Matrix m(static_cast<Eigen::Index>(trajs.size()), d);
  for (std::size_t r = 0; r < trajs.size(); ++r) {
    const auto& pts = trajs[r]->points;
    for (std::size_t t = 0; t < pts.size(); ++t) {
      m(r, 2 * t) = pts[t].x;
      m(r, 2 * t + 1) = pts[t].y;
    }
  }
  return m;
}

/// Row of `points` nearest each centroid (ties: lowest row).
std::vector<std::size_t> nearest_rows(const Matrix& points, const Matrix& centroids) {
  std::vector<std::size_t> out;
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      // Sequential sum: a centroid halfway between two points must see an
      // exact tie, which SIMD reassociation can break.
      double d = 0.0;
      for (Eigen::Index j = 0; j < points.cols(); ++j) {
        const double e = points(r, j) - centroids(c, j);
        d += e * e;
      }
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::size_t>(r);
      }
    }
    out.push_back(best);
  }
  return out;
}

void append_bytes(std::string& key, const Trajectory& t) {
  for (const State& s : t.points) {
    const double v[5] = {s.x, s.y, s.psi, s.v.value_or(0.0), s.omega.value_or(0.0)};
    key.append(reinterpret_cast<const char*>(v), sizeof v);
  }
}

json states_json(const Trajectory& t, bool with_kinematics) {
  json arr = json::array();
  for (const State& s : t.points) {
    if (with_kinematics) arr.push_back({s.x, s.y, s.psi, s.v.value_or(0.0), s.omega.value_or(0.0)});
    else arr.push_back({s.x, s.y, s.psi});
  }
  return arr;
}

Trajectory states_from_json(const json& arr, double dt, TrajectoryKind kind) {
  Trajectory t;
  t.dt = dt;
  t.kind = kind;
  for (const json& row : arr) {
    State s;
    s.x = row.at(0).get<double>();
    s.y = row.at(1).get<double>();
    s.psi = row.at(2).get<double>();
    if (kind == TrajectoryKind::kHistory) {
      s.v = row.at(3).get<double>();
      s.omega = row.at(4).get<double>();
    }
    t.points.push_back(s);
  }
  return t;
}

std::string entry_line(const DictionaryEntry& e) {
  json j;
  j["record_index"] = e.record_index;
  j["source_dataset"] = e.source_dataset;
  j["scenario_id"] = e.scenario_id;
  j["bin"] = e.bin.cell;
  j["features"] = e.features.as_array();
  j["history"] = states_json(e.history, true);
  j["future"] = states_json(e.future, false);
  return j.dump();
}

}  // namespace

BinIndex bin_index(const MotionFeatures& features, const Resolution& resolution) {
  const auto f = features.as_array();
  BinIndex b;
  for (int i = 0; i < 5; ++i) {
    require(resolution[i] > 0.0 && std::isfinite(resolution[i]), ErrorCode::kValidation,
            "bin resolution must be strictly positive");
    b.cell[i] = static_cast<std::int64_t>(std::floor(f[i] / resolution[i]));
  }
  return b;
}

std::uint64_t bin_cluster_seed(std::uint64_t seed, const BinIndex& bin, int which) {
  std::uint64_t h = 0;
  for (std::int64_t c : bin.cell) h = mix64(h ^ static_cast<std::uint64_t>(c));
  return derive_seed({seed, h, static_cast<std::uint64_t>(which)});
}

std::vector<double> flatten_positions(const Trajectory& traj) {
  std::vector<double> v;
  v.reserve(2 * traj.points.size());
  for (const State& s : traj.points) {
    v.push_back(s.x);
    v.push_back(s.y);
  }
  return v;
}

TrajectoryDictionary build_dictionary(const std::vector<CorpusRecord>& records, const DictionaryConfig& config,
                                      std::vector<SourceManifest> sources) {
  require(config.n_clusters >= 1, ErrorCode::kValidation, "n_clusters must be >= 1");
  for (double r : config.resolution) {
    require(r > 0.0 && std::isfinite(r), ErrorCode::kValidation, "bin resolution must be strictly positive");
  }
  TrajectoryDictionary dict;
  dict.resolution = config.resolution;
  dict.n_clusters = config.n_clusters;
  dict.seed = config.seed;
  dict.schema = config.schema;
  dict.sources = std::move(sources);
  dict.total_records = records.size();

  std::vector<MotionFeatures> features(records.size());
  std::map<BinIndex, std::vector<std::size_t>> bins;
  for (std::size_t i = 0; i < records.size(); ++i) {
    features[i] = compute_motion_features(records[i].history, config.limits);
    bins[bin_index(features[i], config.resolution)].push_back(i);
  }
  dict.bin_count = bins.size();

  std::set<std::size_t> selected;
  for (const auto& [bin, members] : bins) {
    std::vector<const Trajectory*> hs, fs;
    for (std::size_t i : members) {
      hs.push_back(&records[i].history);
      fs.push_back(&records[i].future);
    }
    const Matrix h_points = flatten_rows(hs);
    const Matrix f_points = flatten_rows(fs);
    const KMeansResult ch = kmeans(h_points, config.n_clusters, bin_cluster_seed(config.seed, bin, 0));
    const KMeansResult cf = kmeans(f_points, config.n_clusters, bin_cluster_seed(config.seed, bin, 1));
    for (std::size_t r : nearest_rows(h_points, ch.centroids)) selected.insert(members[r]);
    for (std::size_t r : nearest_rows(f_points, cf.centroids)) selected.insert(members[r]);
  }

  std::set<std::string> seen;
  for (std::size_t i : selected) {
    const CorpusRecord& rec = records[i];
    std::string key;
    append_bytes(key, rec.history);
    append_bytes(key, rec.future);
    if (!seen.insert(std::move(key)).second) continue;
    DictionaryEntry e;
    e.history = rec.history;
    e.future = rec.future;
    e.features = features[i];
    e.bin = bin_index(features[i], config.resolution);
    e.source_dataset = rec.dataset_id;
    e.scenario_id = rec.scenario_id;
    e.record_index = i;
    dict.entries.push_back(std::move(e));
  }
  return dict;
}

TrajectoryDictionary build_dictionary(const std::vector<std::filesystem::path>& corpora,
                                      const DictionaryConfig& config) {
  std::vector<CorpusRecord> all;
  std::vector<SourceManifest> sources;
  for (const auto& p : corpora) {
    std::ifstream in(p, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::kIo, "cannot open corpus: " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    Corpus c = read_corpus(p, config.schema);
    sources.push_back({p.filename().string(), sha256_hex(buf.str()), c.records.size()});
    all.insert(all.end(), std::make_move_iterator(c.records.begin()), std::make_move_iterator(c.records.end()));
  }
  return build_dictionary(all, config, std::move(sources));
}

std::string serialize_dictionary(const TrajectoryDictionary& dict) {
  std::string body;
  for (const DictionaryEntry& e : dict.entries) {
    body += entry_line(e);
    body += '\n';
  }
  json sources = json::array();
  for (const SourceManifest& s : dict.sources) {
    sources.push_back({{"name", s.name}, {"sha256", s.sha256}, {"records", s.records}});
  }
  json header = {{"format", "crossplan-dictionary"},
                 {"format_version", kDictionaryFormatVersion},
                 {"resolution", dict.resolution},
                 {"n_clusters", dict.n_clusters},
                 {"seed", dict.seed},
                 {"history_steps", dict.schema.history_steps},
                 {"future_steps", dict.schema.future_steps},
                 {"dt", dict.schema.dt},
                 {"sources", sources},
                 {"total_records", dict.total_records},
                 {"bin_count", dict.bin_count},
                 {"entry_count", dict.entries.size()},
                 {"checksum", sha256_hex(body)}};
  return header.dump() + "\n" + body;
}

TrajectoryDictionary parse_dictionary(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::size_t pos = 0;
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) {
        lines.push_back(text.substr(pos));
        break;
      }
      lines.push_back(text.substr(pos, nl - pos));
      pos = nl + 1;
    }
  }
  require(!lines.empty(), ErrorCode::kMalformed, "dictionary file is empty");
  json header;
  try {
    header = json::parse(lines[0]);
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("dictionary header is not valid JSON: ") + e.what());
  }
  try {
    require(header.at("format").get<std::string>() == "crossplan-dictionary", ErrorCode::kMalformed,
            "not a dictionary file");
    const int version = header.at("format_version").get<int>();
    require(version == kDictionaryFormatVersion, ErrorCode::kVersionMismatch,
            "unsupported dictionary format_version " + std::to_string(version));

    TrajectoryDictionary dict;
    dict.resolution = header.at("resolution").get<Resolution>();
    dict.n_clusters = header.at("n_clusters").get<int>();
    dict.seed = header.at("seed").get<std::uint64_t>();
    dict.schema.history_steps = header.at("history_steps").get<int>();
    dict.schema.future_steps = header.at("future_steps").get<int>();
    dict.schema.dt = header.at("dt").get<double>();
    for (const json& s : header.at("sources")) {
      dict.sources.push_back(
          {s.at("name").get<std::string>(), s.at("sha256").get<std::string>(), s.at("records").get<std::uint64_t>()});
    }
    dict.total_records = header.at("total_records").get<std::uint64_t>();
    dict.bin_count = header.at("bin_count").get<std::uint64_t>();
    const std::size_t count = header.at("entry_count").get<std::size_t>();

    std::string body;
    std::vector<json> parsed;
    parsed.reserve(count);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (i == lines.size() - 1 && lines[i].empty()) break;
      try {
        parsed.push_back(json::parse(lines[i]));
      } catch (const json::exception&) {
        fail(ErrorCode::kMalformed, "dictionary entry " + std::to_string(i) + " is truncated or invalid");
      }
      body += lines[i];
      body += '\n';
    }
    require(parsed.size() == count, ErrorCode::kMalformed,
            "dictionary declares " + std::to_string(count) + " entries but holds " + std::to_string(parsed.size()));
    require(sha256_hex(body) == header.at("checksum").get<std::string>(), ErrorCode::kChecksum,
            "dictionary checksum mismatch");

    for (const json& j : parsed) {
      DictionaryEntry e;
      e.record_index = j.at("record_index").get<std::uint64_t>();
      e.source_dataset = j.at("source_dataset").get<std::string>();
      e.scenario_id = j.at("scenario_id").get<std::string>();
      e.bin.cell = j.at("bin").get<std::array<std::int64_t, 5>>();
      e.features = MotionFeatures::from_array(j.at("features").get<std::array<double, 5>>());
      e.history = states_from_json(j.at("history"), dict.schema.dt, TrajectoryKind::kHistory);
      e.future = states_from_json(j.at("future"), dict.schema.dt, TrajectoryKind::kFuture);
      validate_trajectory(e.history, dict.schema.history_steps);
      validate_trajectory(e.future, dict.schema.future_steps);
      dict.entries.push_back(std::move(e));
    }
    return dict;
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("dictionary file is malformed: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kValidation) fail(ErrorCode::kMalformed, e.what());
    throw;
  }
}

void persist_dictionary(const TrajectoryDictionary& dict, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write dictionary: " + path.string());
  out << serialize_dictionary(dict);
  out.flush();
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing dictionary: " + path.string());
}

TrajectoryDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open dictionary: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dictionary(buf.str());
}

}  // namespace crossplan
