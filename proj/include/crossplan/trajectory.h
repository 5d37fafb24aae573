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

#ifndef CROSSPLAN_TRAJECTORY_H_
#define CROSSPLAN_TRAJECTORY_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crossplan {

/// Sampling layout shared by every corpus, dictionary and model.
struct Schema {
  int history_steps = 20;
  int future_steps = 80;
  double dt = 0.1;

  void validate() const;
  friend bool operator==(const Schema&, const Schema&) = default;
};

/// One sampled ego state. `v` and `omega` are present on history states only.
struct State {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  std::optional<double> v;
  std::optional<double> omega;

  friend bool operator==(const State&, const State&) = default;
};

enum class TrajectoryKind { kHistory, kFuture };

struct Trajectory {
  std::vector<State> points;
  double dt = 0.1;
  TrajectoryKind kind = TrajectoryKind::kHistory;

  std::size_t size() const { return points.size(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Checks the trajectory invariants: `expected_steps` points, dt > 0, finite
/// values and unwrapped heading. Throws Error(kValidation).
void validate_trajectory(const Trajectory& traj, int expected_steps);

/// Mean kinematic summary of a trajectory.
struct MotionFeatures {
  double a_bar = 0.0;      // m/s^2
  double v_bar = 0.0;      // m/s
  double kappa_bar = 0.0;  // 1/m
  double omega_bar = 0.0;  // rad/s
  double alpha_bar = 0.0;  // rad/s^2

  std::array<double, 5> as_array() const { return {a_bar, v_bar, kappa_bar, omega_bar, alpha_bar}; }
  static MotionFeatures from_array(const std::array<double, 5>& f) { return {f[0], f[1], f[2], f[3], f[4]}; }
  friend bool operator==(const MotionFeatures&, const MotionFeatures&) = default;
};

struct FeatureLimits {
  double a_max = 5.0;
  double kappa_max = 0.5;
  /// Below this speed the per-step curvature is taken as zero.
  double v_eps = 0.1;
};

/// Per-step speed, acceleration, yaw rate and angular acceleration are finite
/// differences of the positions and heading (central inside, one-sided at the
/// ends). Acceleration and curvature are clipped per step before averaging.
MotionFeatures compute_motion_features(const Trajectory& traj, const FeatureLimits& limits = {});

enum class ManeuverClass : int { kStationary = 0, kForward = 1, kLeftTurn = 2, kRightTurn = 3 };

inline constexpr int kNumManeuverClasses = 4;
std::string_view maneuver_name(ManeuverClass c);

struct ManeuverThresholds {
  double v_stat = 0.5;
  double psi_turn = 0.2617993877991494;  // 15 degrees
  double kappa_turn = 0.02;
};

ManeuverClass classify_maneuver(const Trajectory& traj, const ManeuverThresholds& thresholds = {},
                                const FeatureLimits& limits = {});

/// Timestamped pose of an externally sourced track.
struct TimedPose {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  std::optional<double> v;
  std::optional<double> omega;
};

/// A track before resampling. `anchor_time` is the time of the last history
/// sample.
struct RawRecord {
  std::string dataset_id;
  std::string scenario_id;
  double anchor_time = 0.0;
  std::vector<TimedPose> poses;
};

struct TrajectoryPair {
  Trajectory history;
  Trajectory future;
  friend bool operator==(const TrajectoryPair&, const TrajectoryPair&) = default;
};

/// Resamples to the schema grid by linear interpolation and expresses the
/// result in the ego frame of the last history pose.
TrajectoryPair normalize_schema(const RawRecord& raw, const Schema& schema = {});

/// Builds the RawRecord that a conformant (history, future) pair represents.
RawRecord to_raw_record(const TrajectoryPair& pair, std::string dataset_id = {}, std::string scenario_id = {});

/// Wraps to (-pi, pi].
double wrap_angle(double a);
/// Removes 2*pi jumps so consecutive differences lie in (-pi, pi].
std::vector<double> unwrap_angles(std::span<const double> angles);

/// Rotation by `rotation` about the origin followed by translation; with
/// `mirror` the y axis is reflected first.
struct RigidTransform {
  double dx = 0.0;
  double dy = 0.0;
  double rotation = 0.0;
  bool mirror = false;

  State apply(const State& s) const;
  Trajectory apply(const Trajectory& t) const;
};

/// Re-expresses world-frame states relative to `anchor` (which maps to 0,0,0).
std::vector<State> to_ego_frame(std::span<const State> states, const State& anchor);

}  // namespace crossplan

#endif  // CROSSPLAN_TRAJECTORY_H_
