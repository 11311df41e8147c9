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

#include "pep/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "csv_util.hpp"

namespace pep {

namespace {

FisherInfo grid_information(Point2 pos, Point2 rep, const MotionTerms& mt, const DistanceUncertaintyModel& dist) {
  const RangeObservation obs = range_observation(pos, rep);
  const double sd = dist.sigma(obs.d);
  const double var = sd * sd + mt.sigma_m * mt.sigma_m;
  const double sigma = std::sqrt(var);
  const double dsigma_dd = sd * dist.sigma_derivative(obs.d) / sigma;
  const double dsigma_dv = mt.sigma_m * mt.sigma_m_dv / sigma;

  const Eigen::Vector3d mean_grad(obs.jacobian.x, obs.jacobian.y, mt.mu_dv);
  // Gradient of the variance, so the second term is the Gaussian score
  // information for a state-dependent variance.
  const Eigen::Vector3d var_grad =
      2.0 * sigma * Eigen::Vector3d(dsigma_dd * obs.jacobian.x, dsigma_dd * obs.jacobian.y, dsigma_dv);
  FisherInfo info;
  info.matrix = mean_grad * mean_grad.transpose() / var + var_grad * var_grad.transpose() / (2.0 * var * var);
  return info;
}

// Adds every feature in the annulus to its cell's count and coordinate sum.
void bin_features(const FeatureMap& map, Point2 center, const PlannerParams& params, std::vector<int>& counts,
                  std::vector<Point2>& sums) {
  const double dr = (params.r_max - params.r_min) / params.n_r;
  const double dtheta = 2.0 * std::numbers::pi / params.n_theta;
  thread_local std::vector<std::size_t> nearby;
  map.features_within(center, params.r_max, nearby);
  for (std::size_t idx : nearby) {
    const Point2 f = map.features()[idx];
    const double dx = f.x - center.x;
    const double dy = f.y - center.y;
    const double r = std::sqrt(dx * dx + dy * dy);
    if (r < params.r_min || r >= params.r_max) continue;
    double theta = std::atan2(dy, dx);
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    const int ir = std::min(static_cast<int>((r - params.r_min) / dr), params.n_r - 1);
    const int it = std::min(static_cast<int>(theta / dtheta), params.n_theta - 1);
    const std::size_t c = static_cast<std::size_t>(ir) * params.n_theta + it;
    counts[c] += 1;
    sums[c] = sums[c] + f;
  }
}

// Motion terms are reused while consecutive states share the same speed.
struct MotionCache {
  explicit MotionCache(const MotionUncertaintyModel& m, MotionTermCache* memo = nullptr) : model(m), shared(memo) {}

  const MotionUncertaintyModel& model;
  MotionTermCache* shared = nullptr;
  bool valid = false;
  double v = 0.0;
  MotionTerms terms;

  const MotionTerms& at(double speed) {
    if (shared) return shared->at(speed);
    if (!valid || speed != v) {
      terms = motion_terms(model, speed);
      v = speed;
      valid = true;
    }
    return terms;
  }
};

FisherInfo state_information(const UavState& state, const FeatureMap& map, const UncertaintyModels& models,
                             const PlannerParams& params, MotionCache& cache) {
  const std::size_t n_cells = static_cast<std::size_t>(params.n_r) * params.n_theta;
  thread_local std::vector<int> counts;
  thread_local std::vector<Point2> sums;
  counts.assign(n_cells, 0);
  sums.assign(n_cells, Point2{});
  bin_features(map, state.position(), params, counts, sums);
  FisherInfo total;
  for (std::size_t c = 0; c < n_cells; ++c) {
    if (counts[c] == 0) continue;
    const Point2 rep = (1.0 / counts[c]) * sums[c];
    total += grid_information(state.position(), rep, cache.at(state.v), models.distance);
  }
  return total;
}

}  // namespace

MotionTerms motion_terms(const MotionUncertaintyModel& model, double v) {
  const auto [sigma, sigma_dv] = model.stddev_and_derivative(v);
  return {model.mean_derivative(v), sigma, sigma_dv};
}

const MotionTerms& MotionTermCache::at(double v) {
  auto it = memo_.find(v);
  if (it == memo_.end()) it = memo_.emplace(v, motion_terms(model_, v)).first;
  return it->second;
}

int CircularGridGraph::num_true() const {
  return static_cast<int>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

std::vector<Point2> CircularGridGraph::true_representatives() const {
  std::vector<Point2> out;
  for (std::size_t i = 0; i < occupied.size(); ++i) {
    if (occupied[i]) out.push_back(representatives[i]);
  }
  return out;
}

CircularGridGraph build_cgg(const FeatureMap& map, Point2 center, const PlannerParams& params) {
  CircularGridGraph g;
  g.center = center;
  g.r_min = params.r_min;
  g.r_max = params.r_max;
  g.n_r = params.n_r;
  g.n_theta = params.n_theta;
  const std::size_t n_cells = static_cast<std::size_t>(g.n_r) * g.n_theta;
  g.occupied.assign(n_cells, 0);
  g.representatives.assign(n_cells, Point2{});
  g.counts.assign(n_cells, 0);
  std::vector<Point2> sums(n_cells, Point2{});
  bin_features(map, center, params, g.counts, sums);
  for (std::size_t c = 0; c < n_cells; ++c) {
    if (g.counts[c] > 0) {
      g.occupied[c] = 1;
      g.representatives[c] = (1.0 / g.counts[c]) * sums[c];
    }
  }
  return g;
}

RangeObservation range_observation(Point2 state, Point2 rep) {
  const double dx = rep.x - state.x;
  const double dy = rep.y - state.y;
  const double d = std::hypot(dx, dy);
  if (!(d > 0.0)) throw ValidationError("grid_rep", "degenerate range");
  return {d, {-dx / d, -dy / d}};
}

FisherInfo fim_for_grid(const UavState& state, Point2 grid_rep, const UncertaintyModels& models) {
  return grid_information(state.position(), grid_rep, motion_terms(models.motion, state.v), models.distance);
}

FisherInfo fim_at_state(const UavState& state, const FeatureMap& map, const UncertaintyModels& models,
                        const PlannerParams& params) {
  MotionCache cache(models.motion);
  return state_information(state, map, models, params, cache);
}

double fim_metric(const FisherInfo& info, MetricKind kind) {
  const Eigen::Matrix3d& m = info.matrix;
  double s = 0.0;
  switch (kind) {
    case MetricKind::kMinEigenvaluePosition: {
      const double a = m(0, 0);
      const double c = m(1, 1);
      const double b = 0.5 * (m(0, 1) + m(1, 0));
      const double half_diff = 0.5 * (a - c);
      s = 0.5 * (a + c) - std::sqrt(half_diff * half_diff + b * b);
      break;
    }
    case MetricKind::kMinEigenvalueFull: {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
      s = es.eigenvalues()(0);
      break;
    }
    case MetricKind::kDeterminant:
      s = m.determinant();
      break;
  }
  return std::max(0.0, s);
}

PerceptionCost segment_perception_cost(std::span<const UavState> states, const FeatureMap& map,
                                       const UncertaintyModels& models, const PlannerParams& params,
                                       MotionTermCache* shared) {
  PerceptionCost out;
  out.metric.reserve(states.size());
  MotionCache cache(models.motion, shared);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double s = fim_metric(state_information(states[i], map, models, params, cache), params.metric);
    out.metric.push_back(s);
    double w = 0.0;
    if (states.size() == 1) {
      w = params.dt;
    } else if (i + 1 < states.size()) {
      w = states[i + 1].t - states[i].t;
    }
    out.c_p += w / std::max(s, params.epsilon_fim);
    out.quality += s;
  }
  return out;
}

void write_metric_csv(const std::string& path, std::span<const UavState> states, std::span<const double> metric) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "t,x,y,v,s_of_I\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    out << detail::format_double(s.t) << ',' << detail::format_double(s.x) << ',' << detail::format_double(s.y) << ','
        << detail::format_double(s.v) << ',' << detail::format_double(metric[i]) << '\n';
  }
}

}  // namespace pep
