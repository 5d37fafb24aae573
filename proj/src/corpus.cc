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

#include "crossplan/corpus.h"

#include <cmath>
#include <fstream>
#include <numbers>

#include "crossplan/error.h"
#include "crossplan/rng.h"
#include "json.hpp"

namespace crossplan {
namespace {

using nlohmann::json;

constexpr double kLaneWidth = 3.5;
constexpr int kRampSteps = 5;

struct Motion {
  ManeuverClass cls;
  double v;
  double omega;
};

ManeuverClass sample_class(const std::array<double, 4>& mix, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int c = 0; c < kNumManeuverClasses; ++c) {
    acc += mix[c];
    if (u < acc) return static_cast<ManeuverClass>(c);
  }
  for (int c = kNumManeuverClasses - 1; c >= 0; --c) {
    if (mix[c] > 0.0) return static_cast<ManeuverClass>(c);
  }
  return ManeuverClass::kForward;
}

Motion sample_motion(ManeuverClass cls, const ScenarioConfig& cfg, Rng& rng, double carried_speed) {
  // Draws are made unconditionally so the stream position does not depend on
  // the class.
  const double drawn_speed = rng.uniform(cfg.speed_range[0], cfg.speed_range[1]);
  const double radius = rng.uniform(cfg.turn_radius_range[0], cfg.turn_radius_range[1]);
  const double v = carried_speed > 0.0 ? carried_speed : drawn_speed;
  switch (cls) {
    case ManeuverClass::kStationary: return {cls, 0.0, 0.0};
    case ManeuverClass::kForward: return {cls, v, 0.0};
    case ManeuverClass::kLeftTurn: return {cls, v, v / radius};
    case ManeuverClass::kRightTurn: return {cls, v, -v / radius};
  }
  return {cls, v, 0.0};
}

/// Integrates a unicycle over the full history+future horizon.
std::vector<State> simulate_track(const ScenarioConfig& cfg, Rng& rng, State start) {
  const int th = cfg.schema.history_steps;
  const int total = th + cfg.schema.future_steps;
  const double dt = cfg.schema.dt;

  const Motion hist = sample_motion(sample_class(cfg.maneuver_mix, rng), cfg, rng, 0.0);
  const bool switch_now = rng.uniform() < cfg.transition_prob;
  const ManeuverClass next_cls = sample_class(cfg.maneuver_mix, rng);
  Motion fut = hist;
  if (switch_now && next_cls != hist.cls) fut = sample_motion(next_cls, cfg, rng, hist.v);
  else (void)sample_motion(next_cls, cfg, rng, hist.v);

  std::vector<State> track(total);
  State s = start;
  for (int k = 0; k < total; ++k) {
    double v = hist.v;
    double omega = hist.omega;
    if (k >= th) {
      const double w = std::min(1.0, static_cast<double>(k - th + 1) / kRampSteps);
      v = hist.v + (fut.v - hist.v) * w;
      omega = hist.omega + (fut.omega - hist.omega) * w;
    }
    s.v = v;
    s.omega = omega;
    track[k] = s;
    const double heading_mid = s.psi + 0.5 * omega * dt;
    s.x += v * std::cos(heading_mid) * dt;
    s.y += v * std::sin(heading_mid) * dt;
    s.psi += omega * dt;
  }
  return track;
}

Trajectory slice(const std::vector<State>& track, int begin, int end, double dt, TrajectoryKind kind) {
  Trajectory t{{track.begin() + begin, track.begin() + end}, dt, kind};
  if (kind == TrajectoryKind::kFuture) {
    for (State& s : t.points) {
      s.v.reset();
      s.omega.reset();
    }
  }
  return t;
}

json history_json(const Trajectory& t) {
  json arr = json::array();
  for (const State& s : t.points) arr.push_back({s.x, s.y, s.psi, s.v.value_or(0.0), s.omega.value_or(0.0)});
  return arr;
}

json future_json(const Trajectory& t) {
  json arr = json::array();
  for (const State& s : t.points) arr.push_back({s.x, s.y, s.psi});
  return arr;
}

Trajectory parse_states(const json& arr, int steps, int width, double dt, TrajectoryKind kind) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != steps) {
    fail(ErrorCode::kMalformed, "expected " + std::to_string(steps) + " states");
  }
  Trajectory t;
  t.dt = dt;
  t.kind = kind;
  t.points.reserve(steps);
  for (const json& row : arr) {
    if (!row.is_array() || static_cast<int>(row.size()) != width) {
      fail(ErrorCode::kMalformed, "expected states of width " + std::to_string(width));
    }
    State s;
    s.x = row[0].get<double>();
    s.y = row[1].get<double>();
    s.psi = row[2].get<double>();
    if (width == 5) {
      s.v = row[3].get<double>();
      s.omega = row[4].get<double>();
    }
    t.points.push_back(s);
  }
  return t;
}

std::string manifest_for(const ScenarioConfig& cfg, std::size_t count) {
  json m = {{"format", "crossplan-corpus"},
            {"version", 1},
            {"dataset_id", cfg.dataset_id},
            {"seed", cfg.seed},
            {"count", count},
            {"maneuver_mix", cfg.maneuver_mix},
            {"speed_range", cfg.speed_range},
            {"turn_radius_range", cfg.turn_radius_range},
            {"noise_std", cfg.noise_std},
            {"transition_prob", cfg.transition_prob},
            {"max_neighbors", cfg.max_neighbors},
            {"history_steps", cfg.schema.history_steps},
            {"future_steps", cfg.schema.future_steps},
            {"dt", cfg.schema.dt}};
  return json{{"manifest", m}}.dump();
}

}  // namespace

void ScenarioConfig::validate() const {
  schema.validate();
  double total = 0.0;
  for (double p : maneuver_mix) {
    require(p >= 0.0, ErrorCode::kValidation, "maneuver_mix entries must be non-negative");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::kValidation, "maneuver_mix must sum to 1");
  require(speed_range[0] > 0.0 && speed_range[0] <= speed_range[1], ErrorCode::kValidation,
          "speed_range must be a non-empty positive interval");
  require(turn_radius_range[0] > 0.0 && turn_radius_range[0] <= turn_radius_range[1], ErrorCode::kValidation,
          "turn_radius_range must be a non-empty positive interval");
  require(noise_std >= 0.0 && std::isfinite(noise_std), ErrorCode::kValidation, "noise_std must be >= 0");
  require(!dataset_id.empty(), ErrorCode::kValidation, "dataset_id must be non-empty");
  require(transition_prob >= 0.0 && transition_prob <= 1.0, ErrorCode::kValidation,
          "transition_prob must lie in [0, 1]");
  require(max_neighbors >= 0 && max_neighbors <= 4, ErrorCode::kValidation, "max_neighbors must lie in [0, 4]");
}

void validate_record(const CorpusRecord& record, const Schema& schema) {
  require(!record.dataset_id.empty(), ErrorCode::kValidation, "record dataset_id must be non-empty");
  require(std::abs(record.dt - schema.dt) <= 1e-12, ErrorCode::kValidation, "record dt does not match schema");
  validate_trajectory(record.history, schema.history_steps);
  validate_trajectory(record.future, schema.future_steps);
  for (const State& s : record.history.points) {
    require(s.v.has_value() && s.omega.has_value(), ErrorCode::kValidation, "history states need v and omega");
  }
  require(record.neighbors.size() <= 4, ErrorCode::kValidation, "at most 4 neighbors");
  require(record.neighbor_futures.empty() || record.neighbor_futures.size() == record.neighbors.size(),
          ErrorCode::kValidation, "neighbor_futures must match neighbors");
  for (const Trajectory& n : record.neighbors) validate_trajectory(n, schema.history_steps);
  for (const Trajectory& n : record.neighbor_futures) validate_trajectory(n, schema.future_steps);
}

CorpusRecord gen_scenario(const ScenarioConfig& cfg, std::uint64_t index) {
  cfg.validate();
  Rng geometry(derive_seed({cfg.seed, index, 0}));
  Rng noise(derive_seed({cfg.seed, index, 1}));
  const int th = cfg.schema.history_steps;
  const int tf = cfg.schema.future_steps;
  const double dt = cfg.schema.dt;

  State start;
  start.x = geometry.uniform(-100.0, 100.0);
  start.y = geometry.uniform(-100.0, 100.0);
  start.psi = geometry.uniform(-std::numbers::pi, std::numbers::pi);
  std::vector<State> ego = simulate_track(cfg, geometry, start);

  const int n_neighbors = static_cast<int>(geometry.below(static_cast<std::uint64_t>(cfg.max_neighbors) + 1));
  std::vector<std::vector<State>> others;
  static constexpr int kLanes[] = {-2, -1, 1, 2};
  for (int n = 0; n < n_neighbors; ++n) {
    const double lateral = kLanes[geometry.below(4)] * kLaneWidth;
    const double longitudinal = geometry.uniform(-15.0, 15.0);
    State s = start;
    s.x += longitudinal * std::cos(start.psi) - lateral * std::sin(start.psi);
    s.y += longitudinal * std::sin(start.psi) + lateral * std::cos(start.psi);
    others.push_back(simulate_track(cfg, geometry, s));
  }

  auto perturb = [&](std::vector<State>& track) {
    for (State& s : track) {
      const double ex = noise.normal();
      const double ey = noise.normal();
      s.x += cfg.noise_std * ex;
      s.y += cfg.noise_std * ey;
    }
  };
  perturb(ego);
  for (auto& o : others) perturb(o);

  const State anchor = ego[th - 1];
  ego = to_ego_frame(ego, anchor);
  CorpusRecord rec;
  rec.dataset_id = cfg.dataset_id;
  char id[64];
  std::snprintf(id, sizeof id, "%s-%06llu", cfg.dataset_id.c_str(), static_cast<unsigned long long>(index));
  rec.scenario_id = id;
  rec.dt = dt;
  rec.history = slice(ego, 0, th, dt, TrajectoryKind::kHistory);
  rec.future = slice(ego, th, th + tf, dt, TrajectoryKind::kFuture);
  for (auto& o : others) {
    o = to_ego_frame(o, anchor);
    rec.neighbors.push_back(slice(o, 0, th, dt, TrajectoryKind::kHistory));
    rec.neighbor_futures.push_back(slice(o, th, th + tf, dt, TrajectoryKind::kFuture));
  }
  return rec;
}

std::string record_to_json(const CorpusRecord& record) {
  json j;
  j["dataset_id"] = record.dataset_id;
  j["scenario_id"] = record.scenario_id;
  j["dt"] = record.dt;
  j["history"] = history_json(record.history);
  j["future"] = future_json(record.future);
  if (!record.neighbors.empty()) {
    json nb = json::array();
    for (const Trajectory& t : record.neighbors) nb.push_back(history_json(t));
    j["neighbors"] = std::move(nb);
  }
  if (!record.neighbor_futures.empty()) {
    json nf = json::array();
    for (const Trajectory& t : record.neighbor_futures) nf.push_back(future_json(t));
    j["neighbor_futures"] = std::move(nf);
  }
  return j.dump();
}

CorpusRecord record_from_json(const std::string& line, const Schema& schema) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("corpus line is not valid JSON: ") + e.what());
  }
  try {
    CorpusRecord rec;
    rec.dataset_id = j.at("dataset_id").get<std::string>();
    rec.scenario_id = j.at("scenario_id").get<std::string>();
    rec.dt = j.at("dt").get<double>();
    rec.history = parse_states(j.at("history"), schema.history_steps, 5, rec.dt, TrajectoryKind::kHistory);
    rec.future = parse_states(j.at("future"), schema.future_steps, 3, rec.dt, TrajectoryKind::kFuture);
    if (j.contains("neighbors")) {
      for (const json& n : j["neighbors"]) {
        rec.neighbors.push_back(parse_states(n, schema.history_steps, 5, rec.dt, TrajectoryKind::kHistory));
      }
    }
    if (j.contains("neighbor_futures")) {
      for (const json& n : j["neighbor_futures"]) {
        rec.neighbor_futures.push_back(parse_states(n, schema.future_steps, 3, rec.dt, TrajectoryKind::kFuture));
      }
    }
    validate_record(rec, schema);
    return rec;
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("corpus record is malformed: ") + e.what());
  }
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records,
                  const std::string& manifest_json) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open corpus for writing: " + path.string());
  if (!manifest_json.empty()) out << manifest_json << '\n';
  for (const CorpusRecord& r : records) out << record_to_json(r) << '\n';
  out.flush();
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing corpus: " + path.string());
}

void gen_corpus(const ScenarioConfig& cfg, std::size_t count, const std::filesystem::path& path) {
  cfg.validate();
  std::vector<CorpusRecord> records;
  records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) records.push_back(gen_scenario(cfg, i));
  write_corpus(path, records, manifest_for(cfg, count));
}

Corpus read_corpus(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open corpus: " + path.string());
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("{\"manifest\"", 0) == 0) {
      corpus.manifest_json = line;
      continue;
    }
    try {
      corpus.records.push_back(record_from_json(line, schema));
    } catch (const Error& e) {
      fail(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  require(!in.bad(), ErrorCode::kIo, "failed reading corpus: " + path.string());
  return corpus;
}

std::vector<CorpusRecord> read_corpora(const std::vector<std::filesystem::path>& paths, const Schema& schema) {
  std::vector<CorpusRecord> all;
  for (const auto& p : paths) {
    Corpus c = read_corpus(p, schema);
    all.insert(all.end(), std::make_move_iterator(c.records.begin()), std::make_move_iterator(c.records.end()));
  }
  return all;
}

}  // namespace crossplan
