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

// Perception quality from range measurements of map features.
//
// Features around the vehicle are binned into an annular-sector grid; every
// occupied cell contributes one pseudo-measurement at the centroid of its
// features. Each pseudo-measurement is a range observation with Gaussian
// noise whose mean and deviation depend on speed and range, so its Fisher
// information over (x, y, V) has a mean-gradient term and a
// deviation-gradient term.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "pep/core.hpp"
#include "pep/uncertainty.hpp"

namespace pep {

struct CircularGridGraph {
  Point2 center;
  double r_min = 0.0;
  double r_max = 0.0;
  int n_r = 0;
  int n_theta = 0;
  std::vector<std::uint8_t> occupied;    // n_r * n_theta, radial-major
  std::vector<Point2> representatives;   // centroid per cell, meaningful where occupied
  std::vector<int> counts;

  std::size_t index(int radial, int angular) const {
    return static_cast<std::size_t>(radial) * n_theta + angular;
  }
  bool is_true(int radial, int angular) const { return occupied[index(radial, angular)] != 0; }
  int num_true() const;
  /// Representatives of the true cells in cell-index order.
  std::vector<Point2> true_representatives() const;
};

CircularGridGraph build_cgg(const FeatureMap& map, Point2 center, const PlannerParams& params);

struct RangeObservation {
  double d = 0.0;
  Point2 jacobian;  // d(range)/d(x, y)
};

/// Throws ValidationError("degenerate range") when the points coincide.
RangeObservation range_observation(Point2 state, Point2 grid_rep);

struct FisherInfo {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();  // over (x, y, V)

  FisherInfo& operator+=(const FisherInfo& o) {
    matrix += o.matrix;
    return *this;
  }
};

FisherInfo fim_for_grid(const UavState& state, Point2 grid_rep, const UncertaintyModels& models);

/// Sum of per-cell information over the true cells of the grid built at the
/// state's position. Zero when no cell is true.
FisherInfo fim_at_state(const UavState& state, const FeatureMap& map, const UncertaintyModels& models,
                        const PlannerParams& params);

/// Scalar summary, clamped below at zero.
double fim_metric(const FisherInfo& info, MetricKind kind = MetricKind::kMinEigenvaluePosition);

/// Speed-dependent parts of the sensor noise (dmu/dv, sigma_M, dsigma_M/dv).
struct MotionTerms {
  double mu_dv = 0.0;
  double sigma_m = 0.0;
  double sigma_m_dv = 0.0;
};

MotionTerms motion_terms(const MotionUncertaintyModel& model, double v);

/// Memo of motion_terms keyed by exact speed for one motion model. Not
/// thread-safe; use one per planning call.
class MotionTermCache {
 public:
  explicit MotionTermCache(const MotionUncertaintyModel& model) : model_(model) {}
  const MotionTerms& at(double v);

 private:
  const MotionUncertaintyModel& model_;
  std::unordered_map<double, MotionTerms> memo_;
};

struct PerceptionCost {
  double c_p = 0.0;
  double quality = 0.0;
  std::vector<double> metric;  // s(I) per state
};

/// c_p = sum_i w_i / max(s_i, epsilon_fim), where w_i is the time from state
/// i to state i+1 (the last state owns no time unless it is the only one,
/// in which case it owns dt). quality = sum_i s_i.
/// `cache`, when given, must have been built for models.motion.
PerceptionCost segment_perception_cost(std::span<const UavState> states, const FeatureMap& map,
                                       const UncertaintyModels& models, const PlannerParams& params,
                                       MotionTermCache* cache = nullptr);

void write_metric_csv(const std::string& path, std::span<const UavState> states, std::span<const double> metric);

}  // namespace pep
