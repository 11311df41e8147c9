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

// RRT*-style planner over spline-smoothed trajectory segments.
//
// The tree grows in the plane. Each edge is a trajectory segment obtained by
// smoothing the parent's ancestor chain together with the new node and then
// choosing the cruise speed that minimises
//   alpha_p * C_P + alpha_e * C_E
// for that segment. Rewiring reparents nearby tips through a new tip when
// that lowers their cost-to-come.

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pep/core.hpp"
#include "pep/energy.hpp"
#include "pep/perception.hpp"
#include "pep/spline.hpp"
#include "pep/uncertainty.hpp"

namespace pep {

/// Everything a planning call reads; all referenced objects must outlive it.
struct PlanContext {
  const FeatureMap& map;
  const UncertaintyModels& uncertainty;
  const EnergyModel& energy;
  const PlannerParams& params;
  /// Optional memo for the motion model in `uncertainty`.
  MotionTermCache* motion_cache = nullptr;
};

class PlanTree {
 public:
  PlanTree(const UavState& root, const GoalRegion& goal);

  std::size_t size() const { return segments_.size(); }
  const TrajectorySegment& segment(int node) const { return segments_[node]; }
  const UavState& tip(int node) const { return segments_[node].tip(); }
  Point2 position(int node) const { return tip(node).position(); }
  int parent(int node) const { return segments_[node].parent; }
  const std::vector<int>& children(int node) const { return children_[node]; }
  const GoalRegion& goal() const { return goal_; }

  /// Node closest to p; ties go to the lowest index.
  int nearest(Point2 p) const;
  /// Nodes within `radius` of p in index order.
  std::vector<int> within(Point2 p, double radius) const;

  /// Appends a segment under `parent`. Throws PlanningError when the first
  /// state does not match the parent's tip.
  int insert(int parent, TrajectorySegment segment);

  /// Replaces node's incoming segment with one hanging off `new_parent` and
  /// shifts cost-to-come and timestamps of the whole subtree.
  void reparent(int node, int new_parent, TrajectorySegment segment);

  bool is_ancestor(int ancestor, int node) const;
  /// Node positions from up to `window` ancestors of `node`, oldest first,
  /// followed by node itself.
  std::vector<Point2> control_chain(int node, int window) const;
  /// Root-to-node index chain.
  std::vector<int> chain(int node) const;

  std::optional<int> best_goal_tip() const { return best_goal_; }
  double best_goal_cost() const;

  /// Throws PlanningError describing the first violated structural
  /// invariant (continuity, acyclicity, cost-to-come consistency).
  void check_invariants(double tol = 1e-9) const;

 private:
  void refresh_best_goal();

  std::vector<TrajectorySegment> segments_;
  std::vector<std::vector<int>> children_;
  std::vector<int> goal_nodes_;
  std::optional<int> best_goal_;
  GoalRegion goal_;
};

// Individual steps -----------------------------------------------------------

Point2 sample_node(const Bounds& bounds, const GoalRegion& goal, double goal_bias, std::mt19937_64& rng);

/// Point at min(step_len, |toward - from|) from `from` towards `toward`.
Point2 extend(Point2 from, Point2 toward, double step_len);

double near_radius(const PlannerParams& params, std::size_t n_in_tree);

/// Tips inside the shrinking ball around p; the nearest tip when the ball is
/// empty.
std::vector<int> near_tip_states(const PlanTree& tree, Point2 p, const PlannerParams& params);

struct SegmentCandidate {
  std::vector<UavState> states;
  std::vector<double> metric;
  double c_p = 0.0;
  double c_e = 0.0;
  double cost = 0.0;
  double quality = 0.0;
  double v_tmp = 0.0;
  double arc_length = 0.0;
};

/// Candidate cruise speeds, evenly spaced over [v_min, v_max].
std::vector<double> velocity_candidates(const PlannerParams& params);

/// Best cruise speed for the path given the entry speed. With `forced_v`
/// only that cruise speed is tried. Returns nullopt when every candidate is
/// infeasible (ramp too long or collision).
std::optional<SegmentCandidate> opt_vel(const SmoothPath& path, double v_cur, double t0, const PlanContext& ctx,
                                        std::optional<double> forced_v = std::nullopt);

/// Builds the segment record stored in the tree.
TrajectorySegment make_segment(SegmentCandidate candidate, int parent, double parent_cum_cost);

/// Rewires every near tip through `new_tip` where that lowers its
/// cost-to-come. Returns the number of reparented tips.
int rewire(PlanTree& tree, int new_tip, std::span<const int> near_tips, const PlanContext& ctx);

// Full planning --------------------------------------------------------------

struct PlanStats {
  int iterations = 0;
  int extensions = 0;
  int rewires = 0;
  std::vector<std::pair<int, double>> best_cost_history;  // (iteration, best goal cost)
};

struct PlanOptions {
  /// Invoked every `checkpoint_every` iterations and once at the end.
  std::function<void(const PlanTree&, int iteration)> on_checkpoint;
  int checkpoint_every = 100;
  /// Progress line every 1000 samples when set.
  std::function<void(const std::string&)> log;
};

class GoalUnreachableError : public PlanningError {
 public:
  GoalUnreachableError(const std::string& what, std::shared_ptr<const PlanTree> tree)
      : PlanningError(what), tree_(std::move(tree)) {}
  const std::shared_ptr<const PlanTree>& tree() const { return tree_; }

 private:
  std::shared_ptr<const PlanTree> tree_;
};

struct PlanResult {
  Trajectory trajectory;
  PlanStats stats;
};

PlanResult plan(const Scenario& scenario, const UncertaintyModels& uncertainty, const EnergyModel& energy,
                const PlanOptions& options = {});

/// Root-to-tip trajectory with re-derived totals.
Trajectory extract_trajectory(const PlanTree& tree, int tip, const PlannerParams& params);

// Receding horizon -------------------------------------------------------------

struct DriftModel {
  /// Drift per metre is k_drift / max(s(I), epsilon_fim).
  double k_drift = 1e-3;
  double drift_limit = 30.0;
};

struct DriftSample {
  double distance = 0.0;  // travelled, m
  double drift = 0.0;     // accumulated, m
  double x = 0.0;
  double y = 0.0;
  double metric = 0.0;
};

struct ReplanOutcome {
  bool success = false;
  double final_drift = 0.0;
  double distance_travelled = 0.0;
  int n_replans = 0;
  std::string failure_reason;
  std::optional<Point2> exceed_point;
  std::vector<Trajectory> plans;
  std::vector<DriftSample> trace;
};

/// Plans with the features sensed so far, flies the first `horizon` metres,
/// senses features within r_max of the flown states and repeats until the
/// goal is entered or the drift proxy exceeds its limit.
ReplanOutcome replan_loop(const Scenario& scenario, double horizon, const DriftModel& drift,
                          const UncertaintyModels& uncertainty, const EnergyModel& energy, int max_replans = 60);

// Output -----------------------------------------------------------------------

/// CSV with columns t,x,y,v,c_p_cum,c_e_cum.
void write_trajectory_csv(const std::string& path, const Trajectory& trajectory, const EnergyModel& energy,
                          const PlannerParams& params);
std::string trajectory_summary_json(const Trajectory& trajectory, const std::string& timestamp);

}  // namespace pep
