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

#ifndef CROSSPLAN_TESTS_TEST_UTIL_H_
#define CROSSPLAN_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "crossplan/corpus.h"
#include "crossplan/rng.h"
#include "crossplan/trajectory.h"

namespace crossplan::testing {

inline State make_state(double x, double y, double psi, TrajectoryKind kind, double v, double omega) {
  State s{x, y, psi, std::nullopt, std::nullopt};
  if (kind == TrajectoryKind::kHistory) {
    s.v = v;
    s.omega = omega;
  }
  return s;
}

/// Constant speed along heading `psi0` from (x0, y0).
inline Trajectory straight(int n, double speed, TrajectoryKind kind = TrajectoryKind::kHistory, double dt = 0.1,
                           double x0 = 0.0, double y0 = 0.0, double psi0 = 0.0) {
  Trajectory t;
  t.dt = dt;
  t.kind = kind;
  for (int i = 0; i < n; ++i) {
    const double d = speed * dt * i;
    t.points.push_back(make_state(x0 + d * std::cos(psi0), y0 + d * std::sin(psi0), psi0, kind, speed, 0.0));
  }
  return t;
}

/// Circular arc starting at the origin heading +x; positive radius turns left.
inline Trajectory arc(int n, double speed, double radius, TrajectoryKind kind = TrajectoryKind::kHistory,
                      double dt = 0.1) {
  Trajectory t;
  t.dt = dt;
  t.kind = kind;
  const double omega = speed / radius;
  for (int i = 0; i < n; ++i) {
    const double psi = omega * dt * i;
    t.points.push_back(make_state(radius * std::sin(psi), radius * (1.0 - std::cos(psi)), psi, kind, speed, omega));
  }
  return t;
}

inline Trajectory random_walk(int n, Rng& rng, TrajectoryKind kind = TrajectoryKind::kHistory, double dt = 0.1) {
  Trajectory t;
  t.dt = dt;
  t.kind = kind;
  double x = rng.uniform(-5, 5), y = rng.uniform(-5, 5), psi = rng.uniform(-1, 1);
  const double v = rng.uniform(0.5, 10.0);
  for (int i = 0; i < n; ++i) {
    t.points.push_back(make_state(x, y, psi, kind, v, 0.0));
    psi += rng.uniform(-0.05, 0.05);
    x += v * dt * std::cos(psi);
    y += v * dt * std::sin(psi);
  }
  return t;
}

/// Future states drop v and omega as the schema requires.
inline CorpusRecord make_record(Trajectory history, Trajectory future, std::string dataset = "test",
                                std::string scenario = "s") {
  CorpusRecord r;
  r.dataset_id = std::move(dataset);
  r.scenario_id = std::move(scenario);
  r.dt = history.dt;
  history.kind = TrajectoryKind::kHistory;
  future.kind = TrajectoryKind::kFuture;
  for (State& s : future.points) {
    s.v.reset();
    s.omega.reset();
  }
  r.history = std::move(history);
  r.future = std::move(future);
  return r;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("crossplan_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace crossplan::testing

#endif  // CROSSPLAN_TESTS_TEST_UTIL_H_
