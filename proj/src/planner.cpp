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

#include "pep/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "csv_util.hpp"

namespace pep {

// ---------------------------------------------------------------------------
// PlanTree
// ---------------------------------------------------------------------------

PlanTree::PlanTree(const UavState& root, const GoalRegion& goal) : goal_(goal) {
  TrajectorySegment seg;
  seg.states = {root};
  seg.metric = {0.0};
  seg.parent = -1;
  segments_.push_back(std::move(seg));
  children_.emplace_back();
  if (goal_.contains(root.position())) {
    goal_nodes_.push_back(0);
    best_goal_ = 0;
  }
}

int PlanTree::nearest(Point2 p) const {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Point2 q = position(static_cast<int>(i));
    const double d2 = (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<int> PlanTree::within(Point2 p, double radius) const {
  std::vector<int> out;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Point2 q = position(static_cast<int>(i));
    if ((q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y) <= r2) out.push_back(static_cast<int>(i));
  }
  return out;
}

int PlanTree::insert(int parent, TrajectorySegment segment) {
  if (parent < 0 || parent >= static_cast<int>(size())) throw PlanningError("insert: parent out of range");
  if (segment.states.empty()) throw PlanningError("insert: empty segment");
  const UavState& first = segment.states.front();
  const UavState& ptip = tip(parent);
  if (first.x != ptip.x || first.y != ptip.y || first.v != ptip.v) {
    throw PlanningError("insert: segment does not start at the parent tip");
  }
  segment.parent = parent;
  segment.cum_cost = segments_[parent].cum_cost + segment.cost;
  const int id = static_cast<int>(segments_.size());
  const bool in_goal = goal_.contains(segment.tip().position());
  segments_.push_back(std::move(segment));
  children_.emplace_back();
  children_[parent].push_back(id);
  if (in_goal) {
    goal_nodes_.push_back(id);
    if (!best_goal_ || segments_[id].cum_cost < segments_[*best_goal_].cum_cost) best_goal_ = id;
  }
  return id;
}

void PlanTree::reparent(int node, int new_parent, TrajectorySegment segment) {
  if (node <= 0 || node >= static_cast<int>(size())) throw PlanningError("reparent: node out of range");
  if (is_ancestor(node, new_parent)) throw PlanningError("reparent: would create a cycle");
  const TrajectorySegment& old = segments_[node];
  const UavState& old_tip = old.tip();
  const UavState& new_tip = segment.tip();
  if (new_tip.x != old_tip.x || new_tip.y != old_tip.y || new_tip.v != old_tip.v) {
    throw PlanningError("reparent: new segment must end at the existing tip state");
  }
  const UavState& first = segment.states.front();
  const UavState& ptip = tip(new_parent);
  if (first.x != ptip.x || first.y != ptip.y || first.v != ptip.v) {
    throw PlanningError("reparent: segment does not start at the new parent tip");
  }

  auto& siblings = children_[old.parent];
  siblings.erase(std::find(siblings.begin(), siblings.end(), node));
  children_[new_parent].push_back(node);

  segment.parent = new_parent;
  segment.cum_cost = segments_[new_parent].cum_cost + segment.cost;
  const double cost_delta = segment.cum_cost - old.cum_cost;
  const double time_delta = new_tip.t - old_tip.t;
  segments_[node] = std::move(segment);

  std::vector<int> stack(children_[node].begin(), children_[node].end());
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    auto& seg = segments_[n];
    seg.cum_cost += cost_delta;
    for (auto& s : seg.states) s.t += time_delta;
    seg.states.front().t = tip(seg.parent).t;
    stack.insert(stack.end(), children_[n].begin(), children_[n].end());
  }
  refresh_best_goal();
}

void PlanTree::refresh_best_goal() {
  best_goal_.reset();
  for (int g : goal_nodes_) {
    if (!best_goal_ || segments_[g].cum_cost < segments_[*best_goal_].cum_cost) best_goal_ = g;
  }
}

double PlanTree::best_goal_cost() const {
  return best_goal_ ? segments_[*best_goal_].cum_cost : std::numeric_limits<double>::infinity();
}

bool PlanTree::is_ancestor(int ancestor, int node) const {
  for (int n = node; n >= 0; n = segments_[n].parent) {
    if (n == ancestor) return true;
  }
  return false;
}

std::vector<Point2> PlanTree::control_chain(int node, int window) const {
  std::vector<Point2> pts{position(node)};
  for (int n = parent(node), k = 0; n >= 0 && k < window; n = parent(n), ++k) pts.push_back(position(n));
  std::reverse(pts.begin(), pts.end());
  return pts;
}

std::vector<int> PlanTree::chain(int node) const {
  std::vector<int> out;
  for (int n = node; n >= 0; n = parent(n)) out.push_back(n);
  std::reverse(out.begin(), out.end());
  return out;
}

void PlanTree::check_invariants(double tol) const {
  if (segments_.empty() || segments_[0].parent != -1) throw PlanningError("invariant: node 0 must be the root");
  const auto n = static_cast<int>(segments_.size());
  for (int i = 1; i < n; ++i) {
    const auto& seg = segments_[i];
    if (seg.parent < 0 || seg.parent >= n) throw PlanningError("invariant: node " + std::to_string(i) + " has no parent");
    const UavState& first = seg.states.front();
    const UavState& ptip = tip(seg.parent);
    if (first.x != ptip.x || first.y != ptip.y || first.v != ptip.v || std::abs(first.t - ptip.t) > tol) {
      throw PlanningError("invariant: node " + std::to_string(i) + " is not continuous with its parent");
    }
    for (std::size_t k = 1; k < seg.states.size(); ++k) {
      if (!(seg.states[k].t > seg.states[k - 1].t)) {
        throw PlanningError("invariant: node " + std::to_string(i) + " timestamps not increasing");
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    int steps = 0;
    for (int k = i; k >= 0; k = segments_[k].parent) {
      if (++steps > n) throw PlanningError("invariant: cycle through node " + std::to_string(i));
      sum += segments_[k].cost;
    }
    if (std::abs(sum - segments_[i].cum_cost) > tol * std::max(1.0, std::abs(sum))) {
      throw PlanningError("invariant: cum_cost mismatch at node " + std::to_string(i));
    }
    for (int c : children_[i]) {
      if (segments_[c].parent != i) throw PlanningError("invariant: child list inconsistent at node " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

Point2 sample_node(const Bounds& bounds, const GoalRegion& goal, double goal_bias, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < goal_bias) {
    const double r = goal.radius * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    return {goal.center.x + r * std::cos(a), goal.center.y + r * std::sin(a)};
  }
  const double x = bounds.xmin + (bounds.xmax - bounds.xmin) * unit(rng);
  const double y = bounds.ymin + (bounds.ymax - bounds.ymin) * unit(rng);
  return {x, y};
}

Point2 extend(Point2 from, Point2 toward, double step_len) {
  const double d = distance(from, toward);
  if (!(d > 0.0)) throw ValidationError("toward", "coincides with the extension origin");
  if (d <= step_len) return toward;
  return from + (step_len / d) * (toward - from);
}

double near_radius(const PlannerParams& params, std::size_t n_in_tree) {
  const double n = static_cast<double>(std::max<std::size_t>(n_in_tree, 1));
  return std::min(params.near_radius_gamma * std::sqrt(std::log(n) / n), 2.0 * params.step_len);
}

std::vector<int> near_tip_states(const PlanTree& tree, Point2 p, const PlannerParams& params) {
  auto out = tree.within(p, near_radius(params, tree.size()));
  if (out.empty()) out.push_back(tree.nearest(p));
  return out;
}

std::vector<double> velocity_candidates(const PlannerParams& params) {
  const int n = params.n_vel_candidates;
  if (n == 1) return {params.v_min};
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = params.v_min + (params.v_max - params.v_min) * k / (n - 1);
  out.back() = params.v_max;
  return out;
}

namespace {

bool segment_collides(const std::vector<UavState>& states, const FeatureMap& map) {
  if (map.obstacles().empty()) return false;
  std::vector<Point2> pts;
  pts.reserve(states.size());
  for (const auto& s : states) pts.push_back(s.position());
  return std::any_of(map.obstacles().begin(), map.obstacles().end(),
                     [&](const Disc& d) { return polyline_hits_disc(pts, d); });
}

std::optional<SegmentCandidate> evaluate_candidate(const SmoothPath& path, double v_cur, double v_tmp, double t0,
                                                   const PlanContext& ctx) {
  const PlannerParams& p = ctx.params;
  const double length = path.total_length();
  if (!ramp_fits(v_cur, v_tmp, length, p.a_max)) return std::nullopt;
  SegmentCandidate c;
  c.v_tmp = v_tmp;
  c.arc_length = length;
  c.states = sample_states(path, {v_cur, v_tmp, p.a_max}, p.dt, t0);
  if (segment_collides(c.states, ctx.map)) return std::nullopt;
  const SegmentEnergy e = segment_energy_cost(ctx.energy, v_cur, v_tmp, length, p.a_max, p.p_max);
  c.c_e = e.c_e;
  PerceptionCost pc = segment_perception_cost(c.states, ctx.map, ctx.uncertainty, p, ctx.motion_cache);
  c.c_p = pc.c_p;
  c.quality = pc.quality;
  c.metric = std::move(pc.metric);
  c.cost = p.alpha_p * c.c_p + p.alpha_e * c.c_e;
  return c;
}

std::optional<SmoothPath> last_span(std::vector<Point2> pts) {
  // Drop leading control points that coincide with their successor.
  for (std::size_t i = 1; i < pts.size();) {
    if (distance(pts[i - 1], pts[i]) > 0.0) {
      ++i;
    } else {
      if (i + 1 == pts.size()) return std::nullopt;
      pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i - 1));
    }
  }
  if (pts.size() < 2) return std::nullopt;
  const SmoothPath full = smooth(pts);
  return full.tail(full.num_spans() - 1);
}

}  // namespace

std::optional<SegmentCandidate> opt_vel(const SmoothPath& path, double v_cur, double t0, const PlanContext& ctx,
                                        std::optional<double> forced_v) {
  if (forced_v) return evaluate_candidate(path, v_cur, *forced_v, t0, ctx);
  std::optional<SegmentCandidate> best;
  // Ascending speeds with <= keeps the fastest among equal costs.
  for (double v : velocity_candidates(ctx.params)) {
    auto c = evaluate_candidate(path, v_cur, v, t0, ctx);
    if (c && (!best || c->cost <= best->cost)) best = std::move(c);
  }
  return best;
}

TrajectorySegment make_segment(SegmentCandidate c, int parent, double parent_cum_cost) {
  TrajectorySegment seg;
  seg.states = std::move(c.states);
  seg.metric = std::move(c.metric);
  seg.parent = parent;
  seg.c_p = c.c_p;
  seg.c_e = c.c_e;
  seg.cost = c.cost;
  seg.cum_cost = parent_cum_cost + c.cost;
  seg.arc_length = c.arc_length;
  seg.quality = c.quality;
  return seg;
}

int rewire(PlanTree& tree, int new_tip, std::span<const int> near_tips, const PlanContext& ctx) {
  int changed = 0;
  for (int m : near_tips) {
    if (m == new_tip || m == 0 || tree.parent(m) == new_tip || tree.is_ancestor(m, new_tip)) continue;
    auto pts = tree.control_chain(new_tip, ctx.params.smoothing_window);
    pts.push_back(tree.position(m));
    if (distance(tree.position(new_tip), tree.position(m)) <= 0.0) continue;
    const auto path = last_span(std::move(pts));
    if (!path) continue;
    const UavState& from = tree.tip(new_tip);
    auto cand = opt_vel(*path, from.v, from.t, ctx, tree.tip(m).v);
    if (!cand) continue;
    const double via = tree.segment(new_tip).cum_cost + cand->cost;
    const double current = tree.segment(m).cum_cost;
    if (via < current - 1e-12 * std::max(1.0, std::abs(current))) {
      tree.reparent(m, new_tip, make_segment(std::move(*cand), new_tip, tree.segment(new_tip).cum_cost));
      ++changed;
    }
  }
  return changed;
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

Trajectory extract_trajectory(const PlanTree& tree, int tip, const PlannerParams& params) {
  Trajectory traj;
  for (int n : tree.chain(tip)) traj.segments.push_back(tree.segment(n));
  for (std::size_t s = 0; s < traj.segments.size(); ++s) {
    const auto& seg = traj.segments[s];
    traj.total_energy += seg.c_e * params.p_max;
    for (std::size_t i = (s == 0 ? 0 : 1); i < seg.metric.size(); ++i) traj.total_perception += seg.metric[i];
  }
  traj.duration = traj.segments.back().tip().t - traj.segments.front().states.front().t;
  return traj;
}

PlanResult plan(const Scenario& scenario, const UncertaintyModels& uncertainty, const EnergyModel& energy,
                const PlanOptions& options) {
  scenario.validate();
  const PlannerParams& p = scenario.params;
  MotionTermCache motion_cache(uncertainty.motion);
  const PlanContext ctx{scenario.map, uncertainty, energy, p, &motion_cache};

  UavState root = scenario.start;
  root.t = 0.0;
  auto tree = std::make_shared<PlanTree>(root, scenario.goal);
  std::mt19937_64 rng(p.rng_seed);
  PlanResult result;
  PlanStats& stats = result.stats;
  const int hard_cap = 4 * p.max_samples;

  auto checkpoint = [&](int iter) {
    stats.best_cost_history.emplace_back(iter, tree->best_goal_cost());
    if (options.on_checkpoint) options.on_checkpoint(*tree, iter);
  };

  int iter = 0;
  while (!(tree->best_goal_tip() && iter >= p.max_samples) && iter < hard_cap) {
    ++iter;
    const Point2 x_rand = sample_node(scenario.map.bounds(), scenario.goal, p.goal_bias, rng);
    const int nearest = tree->nearest(x_rand);
    if (distance(tree->position(nearest), x_rand) > 0.0) {
      const Point2 x_new = extend(tree->position(nearest), x_rand, p.step_len);
      if (!scenario.map.collides(x_new)) {
        const auto nears = near_tip_states(*tree, x_new, p);
        std::optional<SegmentCandidate> best;
        int best_parent = -1;
        double best_total = std::numeric_limits<double>::infinity();
        for (int n : nears) {
          if (distance(tree->position(n), x_new) <= 0.0) continue;
          auto pts = tree->control_chain(n, p.smoothing_window);
          pts.push_back(x_new);
          const auto path = last_span(std::move(pts));
          if (!path) continue;
          const UavState& from = tree->tip(n);
          auto cand = opt_vel(*path, from.v, from.t, ctx);
          if (!cand) continue;
          const double total = tree->segment(n).cum_cost + cand->cost;
          if (total < best_total) {
            best_total = total;
            best_parent = n;
            best = std::move(cand);
          }
        }
        if (best) {
          const int id = tree->insert(best_parent, make_segment(std::move(*best), best_parent,
                                                                tree->segment(best_parent).cum_cost));
          ++stats.extensions;
          const auto rewire_set = near_tip_states(*tree, tree->position(id), p);
          stats.rewires += rewire(*tree, id, rewire_set, ctx);
        }
      }
    }
    if (iter % options.checkpoint_every == 0) checkpoint(iter);
    if (options.log && iter % 1000 == 0) {
      std::ostringstream os;
      os << "samples=" << iter << " tree=" << tree->size() << " best_cost=" << tree->best_goal_cost();
      options.log(os.str());
    }
  }
  stats.iterations = iter;
  if (iter % options.checkpoint_every != 0) checkpoint(iter);

  if (!tree->best_goal_tip()) {
    throw GoalUnreachableError("goal unreachable after " + std::to_string(iter) + " samples", tree);
  }
  result.trajectory = extract_trajectory(*tree, *tree->best_goal_tip(), p);
  result.trajectory.n_samples_used = iter;
  // Root state's own metric for the perception total.
  const double root_metric =
      fim_metric(fim_at_state(root, scenario.map, uncertainty, p), p.metric);
  result.trajectory.segments.front().metric = {root_metric};
  result.trajectory.total_perception += root_metric;
  return result;
}

// ---------------------------------------------------------------------------
// Receding horizon
// ---------------------------------------------------------------------------

ReplanOutcome replan_loop(const Scenario& scenario, double horizon, const DriftModel& drift,
                          const UncertaintyModels& uncertainty, const EnergyModel& energy, int max_replans) {
  scenario.validate();
  if (!(horizon > 0.0)) throw ValidationError("horizon", "must be > 0");
  const PlannerParams& p = scenario.params;
  const FeatureMap& world = scenario.map;

  std::vector<std::uint8_t> known(world.features().size(), 0);
  std::vector<std::size_t> nearby;
  auto sense = [&](Point2 at) {
    world.features_within(at, p.r_max, nearby);
    for (std::size_t i : nearby) known[i] = 1;
  };

  ReplanOutcome out;
  UavState current = scenario.start;
  current.t = 0.0;
  sense(current.position());
  out.trace.push_back({0.0, 0.0, current.x, current.y,
                       fim_metric(fim_at_state(current, world, uncertainty, p), p.metric)});

  for (int round = 0; round < max_replans; ++round) {
    if (scenario.goal.contains(current.position())) {
      out.success = true;
      return out;
    }
    std::vector<Point2> seen;
    for (std::size_t i = 0; i < known.size(); ++i) {
      if (known[i]) seen.push_back(world.features()[i]);
    }
    Scenario local = scenario;
    local.map = FeatureMap(std::move(seen), world.obstacles(), world.bounds());
    local.start = current;
    local.start.t = 0.0;
    local.params.rng_seed = p.rng_seed + static_cast<std::uint64_t>(round) * 7919u;

    PlanResult planned;
    try {
      planned = plan(local, uncertainty, energy);
    } catch (const PlanningError& e) {
      out.failure_reason = std::string("planning failed: ") + e.what();
      return out;
    }
    ++out.n_replans;
    const auto states = planned.trajectory.states();
    out.plans.push_back(std::move(planned.trajectory));

    double flown = 0.0;
    for (std::size_t i = 1; i < states.size(); ++i) {
      const double step = distance(states[i - 1].position(), states[i].position());
      const double s = fim_metric(fim_at_state(states[i], world, uncertainty, p), p.metric);
      out.final_drift += drift.k_drift * step / std::max(s, p.epsilon_fim);
      out.distance_travelled += step;
      flown += step;
      out.trace.push_back({out.distance_travelled, out.final_drift, states[i].x, states[i].y, s});
      sense(states[i].position());
      current = states[i];
      if (out.final_drift > drift.drift_limit) {
        out.failure_reason = "drift limit exceeded";
        out.exceed_point = states[i].position();
        return out;
      }
      if (scenario.goal.contains(current.position())) {
        out.success = true;
        return out;
      }
      if (flown >= horizon) break;
    }
  }
  out.failure_reason = "replan budget exhausted";
  return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const EnergyModel& energy,
                          const PlannerParams& params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "t,x,y,v,c_p_cum,c_e_cum\n";
  double cp = 0.0;
  double ce_before = 0.0;
  using detail::format_double;
  for (std::size_t s = 0; s < traj.segments.size(); ++s) {
    const auto& seg = traj.segments[s];
    const auto& st = seg.states;
    const double t0 = st.front().t;
    const double v0 = st.front().v;
    const double v1 = st.back().v;
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (!(s > 0 && i == 0)) {
        double ce = ce_before;
        if (s > 0) {
          ce += i + 1 == st.size() ? seg.c_e
                                   : cumulative_segment_energy(energy, v0, v1, params.a_max, st[i].t - t0) /
                                         params.p_max;
        }
        out << format_double(st[i].t) << ',' << format_double(st[i].x) << ',' << format_double(st[i].y) << ','
            << format_double(st[i].v) << ',' << format_double(cp) << ',' << format_double(ce) << '\n';
      }
      if (s > 0 && i + 1 < st.size()) {
        cp += (st[i + 1].t - st[i].t) / std::max(seg.metric[i], params.epsilon_fim);
      }
    }
    ce_before += seg.c_e;
  }
}

std::string trajectory_summary_json(const Trajectory& traj, const std::string& timestamp) {
  nlohmann::json j = {{"total_energy_J", traj.total_energy},
                      {"total_perception", traj.total_perception},
                      {"duration_s", traj.duration},
                      {"n_samples_used", traj.n_samples_used},
                      {"n_segments", traj.segments.size()},
                      {"generated_at", timestamp}};
  return j.dump(2);
}

}  // namespace pep
