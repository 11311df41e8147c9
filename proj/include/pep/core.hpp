/*
 * Copyright 2026 The pep Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pep {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (JSON/CSV syntax, missing columns).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain invariant. `field()` names the
/// offending entry, e.g. "goal.radius".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class PlanningError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

double distance(Point2 a, Point2 b);

struct Disc {
  Point2 center;
  double radius = 0.0;

  bool contains(Point2 p) const { return distance(center, p) <= radius; }
  friend bool operator==(const Disc&, const Disc&) = default;
};

struct Bounds {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;

  bool contains(Point2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Sum of chord lengths. Throws ValidationError for fewer than two points.
double arc_length(std::span<const Point2> points);

/// Shortest distance from `p` to the segment [a, b].
double point_segment_distance(Point2 p, Point2 a, Point2 b);

/// True if any chord of the polyline passes through the disc.
bool polyline_hits_disc(std::span<const Point2> points, const Disc& disc);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Planning state. Gimbal angles are carried along but never read by the
/// planner.
struct UavState {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double theta_r = 0.0;
  double theta_p = 0.0;
  double t = 0.0;

  Point2 position() const { return {x, y}; }
  friend bool operator==(const UavState&, const UavState&) = default;
};

enum class MetricKind { kMinEigenvaluePosition, kMinEigenvalueFull, kDeterminant };

struct PlannerParams {
  double alpha_p = 4.0;
  double alpha_e = 1.0;
  double r_max = 41.0;
  double r_min = 5.0;
  int n_r = 6;
  int n_theta = 12;
  double v_max = 10.0;
  double v_min = 1.0;
  double p_max = 600.0;
  double a_max = 1.0;
  int max_samples = 1000;
  double goal_bias = 0.1;
  double near_radius_gamma = 270.0;
  double step_len = 10.0;
  double dt = 0.1;
  int n_vel_candidates = 10;
  double epsilon_fim = 1e-3;
  std::uint64_t rng_seed = 1;
  int smoothing_window = 4;
  MetricKind metric = MetricKind::kMinEigenvaluePosition;

  /// Throws ValidationError naming the first violated field.
  void validate() const;

  friend bool operator==(const PlannerParams&, const PlannerParams&) = default;
};

class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::vector<Point2> features, std::vector<Disc> obstacles, Bounds bounds);

  const std::vector<Point2>& features() const { return features_; }
  const std::vector<Disc>& obstacles() const { return obstacles_; }
  const Bounds& bounds() const { return bounds_; }

  /// Indices of features within `radius` of `center` (inclusive of the
  /// boundary), in ascending index order.
  void features_within(Point2 center, double radius, std::vector<std::size_t>& out) const;

  bool collides(Point2 p) const;

  void validate() const;

  friend bool operator==(const FeatureMap& a, const FeatureMap& b) {
    return a.features_ == b.features_ && a.obstacles_ == b.obstacles_ && a.bounds_ == b.bounds_;
  }

 private:
  void build_index();

  std::vector<Point2> features_;
  std::vector<Disc> obstacles_;
  Bounds bounds_;

  // Uniform bucket grid over bounds for range queries.
  double cell_ = 10.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

struct GoalRegion {
  Point2 center;
  double radius = 1.0;

  bool contains(Point2 p) const { return distance(center, p) <= radius; }
  friend bool operator==(const GoalRegion&, const GoalRegion&) = default;
};

struct TrajectorySegment {
  std::vector<UavState> states;
  int parent = -1;  // index of the parent tip, -1 for the root
  double c_p = 0.0;
  double c_e = 0.0;
  double cost = 0.0;
  double cum_cost = 0.0;
  double arc_length = 0.0;
  double quality = 0.0;
  std::vector<double> metric;  // s(I) per state

  const UavState& tip() const { return states.back(); }
};

struct Trajectory {
  std::vector<TrajectorySegment> segments;
  double total_energy = 0.0;  // joules
  double total_perception = 0.0;
  double duration = 0.0;
  int n_samples_used = 0;

  /// Concatenated states, shared join states emitted once.
  std::vector<UavState> states() const;
};

struct Scenario {
  std::string name;
  FeatureMap map;
  UavState start;
  GoalRegion goal;
  PlannerParams params;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);

}  // namespace pep
