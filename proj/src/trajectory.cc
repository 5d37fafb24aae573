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

#include "crossplan/trajectory.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crossplan/error.h"

namespace crossplan {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTimeTolerance = 1e-9;

std::vector<double> finite_difference(std::span<const double> values, double dt) {
  const std::size_t n = values.size();
  std::vector<double> d(n);
  d[0] = (values[1] - values[0]) / dt;
  d[n - 1] = (values[n - 1] - values[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (values[i + 1] - values[i - 1]) / (2.0 * dt);
  return d;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

bool all_finite(const State& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.psi) &&
         (!s.v || std::isfinite(*s.v)) && (!s.omega || std::isfinite(*s.omega));
}

}  // namespace

void Schema::validate() const {
  require(history_steps >= 3, ErrorCode::kValidation, "history_steps must be >= 3");
  require(future_steps >= 3, ErrorCode::kValidation, "future_steps must be >= 3");
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::kValidation, "dt must be positive");
}

void validate_trajectory(const Trajectory& traj, int expected_steps) {
  require(static_cast<int>(traj.points.size()) == expected_steps, ErrorCode::kValidation,
          "trajectory has " + std::to_string(traj.points.size()) + " points, expected " +
              std::to_string(expected_steps));
  require(traj.dt > 0.0 && std::isfinite(traj.dt), ErrorCode::kValidation, "trajectory dt must be positive");
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    require(all_finite(traj.points[i]), ErrorCode::kValidation, "non-finite trajectory value");
    if (i > 0) {
      const double d = traj.points[i].psi - traj.points[i - 1].psi;
      require(d > -kPi && d <= kPi, ErrorCode::kValidation, "heading is not unwrapped");
    }
  }
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

std::vector<double> unwrap_angles(std::span<const double> angles) {
  std::vector<double> out(angles.begin(), angles.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double d = angles[i] - angles[i - 1];
    if (d > -kPi && d <= kPi) {
      out[i] = out[i - 1] + d;
    } else {
      out[i] = out[i - 1] + wrap_angle(d);
    }
  }
  return out;
}

MotionFeatures compute_motion_features(const Trajectory& traj, const FeatureLimits& limits) {
  const std::size_t n = traj.points.size();
  require(n >= 3, ErrorCode::kDegenerateInput, "motion features need at least 3 points");
  require(traj.dt > 0.0, ErrorCode::kValidation, "trajectory dt must be positive");
  std::vector<double> xs(n), ys(n), psis(n);
  for (std::size_t i = 0; i < n; ++i) {
    const State& s = traj.points[i];
    require(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.psi), ErrorCode::kValidation,
            "non-finite coordinate");
    xs[i] = s.x;
    ys[i] = s.y;
    psis[i] = s.psi;
  }
  const double dt = traj.dt;
  const std::vector<double> vx = finite_difference(xs, dt);
  const std::vector<double> vy = finite_difference(ys, dt);
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) speed[i] = std::hypot(vx[i], vy[i]);
  std::vector<double> accel = finite_difference(speed, dt);
  const std::vector<double> omega = finite_difference(unwrap_angles(psis), dt);
  const std::vector<double> alpha = finite_difference(omega, dt);

  std::vector<double> kappa(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (speed[i] >= limits.v_eps) kappa[i] = omega[i] / speed[i];
    kappa[i] = std::clamp(kappa[i], -limits.kappa_max, limits.kappa_max);
    accel[i] = std::clamp(accel[i], -limits.a_max, limits.a_max);
  }
  return {mean(accel), mean(speed), mean(kappa), mean(omega), mean(alpha)};
}

std::string_view maneuver_name(ManeuverClass c) {
  switch (c) {
    case ManeuverClass::kStationary: return "Stationary";
    case ManeuverClass::kForward: return "Forward";
    case ManeuverClass::kLeftTurn: return "LeftTurn";
    case ManeuverClass::kRightTurn: return "RightTurn";
  }
  return "Unknown";
}

ManeuverClass classify_maneuver(const Trajectory& traj, const ManeuverThresholds& thresholds,
                                const FeatureLimits& limits) {
  const MotionFeatures f = compute_motion_features(traj, limits);
  if (f.v_bar < thresholds.v_stat) return ManeuverClass::kStationary;
  std::vector<double> psis(traj.points.size());
  for (std::size_t i = 0; i < psis.size(); ++i) psis[i] = traj.points[i].psi;
  const std::vector<double> unwrapped = unwrap_angles(psis);
  const double dpsi = unwrapped.back() - unwrapped.front();
  if (std::abs(dpsi) > thresholds.psi_turn || std::abs(f.kappa_bar) > thresholds.kappa_turn) {
    const double sign = dpsi != 0.0 ? dpsi : f.kappa_bar;
    return sign > 0.0 ? ManeuverClass::kLeftTurn : ManeuverClass::kRightTurn;
  }
  return ManeuverClass::kForward;
}

State RigidTransform::apply(const State& s) const {
  State in = s;
  if (mirror) {
    in.y = -in.y;
    in.psi = -in.psi;
    if (in.omega) in.omega = -*in.omega;
  }
  const double c = std::cos(rotation);
  const double sn = std::sin(rotation);
  State out = in;
  out.x = c * in.x - sn * in.y + dx;
  out.y = sn * in.x + c * in.y + dy;
  out.psi = in.psi + rotation;
  return out;
}

Trajectory RigidTransform::apply(const Trajectory& t) const {
  Trajectory out = t;
  for (State& s : out.points) s = apply(s);
  return out;
}

std::vector<State> to_ego_frame(std::span<const State> states, const State& anchor) {
  const double c = std::cos(anchor.psi);
  const double s = std::sin(anchor.psi);
  std::vector<State> out;
  out.reserve(states.size());
  for (const State& st : states) {
    const double dx = st.x - anchor.x;
    const double dy = st.y - anchor.y;
    State e = st;
    e.x = c * dx + s * dy;
    e.y = -s * dx + c * dy;
    e.psi = st.psi - anchor.psi;
    out.push_back(e);
  }
  return out;
}

namespace {

struct Bracket {
  std::size_t lo;
  std::size_t hi;
  double w;  // weight of hi
};

Bracket locate(const std::vector<TimedPose>& poses, double t) {
  auto it = std::lower_bound(poses.begin(), poses.end(), t,
                             [](const TimedPose& p, double value) { return p.t < value; });
  std::size_t hi = static_cast<std::size_t>(it - poses.begin());
  if (hi < poses.size() && std::abs(poses[hi].t - t) <= kTimeTolerance) return {hi, hi, 0.0};
  if (hi > 0 && std::abs(poses[hi - 1].t - t) <= kTimeTolerance) return {hi - 1, hi - 1, 0.0};
  if (hi == 0) return {0, 0, 0.0};
  if (hi >= poses.size()) return {poses.size() - 1, poses.size() - 1, 0.0};
  const std::size_t lo = hi - 1;
  return {lo, hi, (t - poses[lo].t) / (poses[hi].t - poses[lo].t)};
}

double lerp(double a, double b, double w) { return w == 0.0 ? a : a + (b - a) * w; }

}  // namespace

TrajectoryPair normalize_schema(const RawRecord& raw, const Schema& schema) {
  schema.validate();
  const auto& poses = raw.poses;
  require(poses.size() >= 2, ErrorCode::kValidation, "raw record needs at least two poses");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const TimedPose& p = poses[i];
    require(std::isfinite(p.t) && std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.psi),
            ErrorCode::kValidation, "non-finite raw pose");
    if (i > 0) require(p.t > poses[i - 1].t, ErrorCode::kValidation, "non-monotone timestamps");
  }
  const int th = schema.history_steps;
  const int tf = schema.future_steps;
  const double dt = schema.dt;
  const double t_start = raw.anchor_time - (th - 1) * dt;
  const double t_end = raw.anchor_time + tf * dt;
  require(poses.front().t <= t_start + kTimeTolerance && poses.back().t >= t_end - kTimeTolerance,
          ErrorCode::kValidation, "insufficient temporal coverage");

  std::vector<double> raw_psi(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) raw_psi[i] = poses[i].psi;
  const std::vector<double> psi = unwrap_angles(raw_psi);

  auto sample = [&](double t) {
    const Bracket b = locate(poses, t);
    State s;
    s.x = lerp(poses[b.lo].x, poses[b.hi].x, b.w);
    s.y = lerp(poses[b.lo].y, poses[b.hi].y, b.w);
    s.psi = lerp(psi[b.lo], psi[b.hi], b.w);
    return std::pair{s, b};
  };

  std::vector<State> history(th), future(tf);
  bool kinematics_present = true;
  std::vector<Bracket> history_brackets(th);
  for (int i = 0; i < th; ++i) {
    auto [s, b] = sample(raw.anchor_time - (th - 1 - i) * dt);
    history[i] = s;
    history_brackets[i] = b;
    for (std::size_t k = b.lo; k <= b.hi; ++k) {
      if (!poses[k].v || !poses[k].omega) kinematics_present = false;
    }
  }
  for (int j = 0; j < tf; ++j) future[j] = sample(raw.anchor_time + (j + 1) * dt).first;

  if (kinematics_present) {
    for (int i = 0; i < th; ++i) {
      const Bracket& b = history_brackets[i];
      history[i].v = lerp(*poses[b.lo].v, *poses[b.hi].v, b.w);
      history[i].omega = lerp(*poses[b.lo].omega, *poses[b.hi].omega, b.w);
    }
  } else {
    std::vector<double> xs(th), ys(th), ps(th);
    for (int i = 0; i < th; ++i) {
      xs[i] = history[i].x;
      ys[i] = history[i].y;
      ps[i] = history[i].psi;
    }
    const auto vx = finite_difference(xs, dt);
    const auto vy = finite_difference(ys, dt);
    const auto om = finite_difference(ps, dt);
    for (int i = 0; i < th; ++i) {
      history[i].v = std::hypot(vx[i], vy[i]);
      history[i].omega = om[i];
    }
  }

  const State anchor = history.back();
  TrajectoryPair out;
  out.history = {to_ego_frame(history, anchor), dt, TrajectoryKind::kHistory};
  out.future = {to_ego_frame(future, anchor), dt, TrajectoryKind::kFuture};
  for (State& s : out.future.points) {
    s.v.reset();
    s.omega.reset();
  }
  return out;
}

RawRecord to_raw_record(const TrajectoryPair& pair, std::string dataset_id, std::string scenario_id) {
  RawRecord raw;
  raw.dataset_id = std::move(dataset_id);
  raw.scenario_id = std::move(scenario_id);
  const double dt = pair.history.dt;
  const std::size_t th = pair.history.points.size();
  raw.anchor_time = static_cast<double>(th - 1) * dt;
  std::size_t k = 0;
  for (const auto* traj : {&pair.history, &pair.future}) {
    for (const State& s : traj->points) {
      raw.poses.push_back({static_cast<double>(k) * dt, s.x, s.y, s.psi, s.v, s.omega});
      ++k;
    }
  }
  return raw;
}

}  // namespace crossplan
