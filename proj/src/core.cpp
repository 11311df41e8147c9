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

#include "pep/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pep {

using nlohmann::json;

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double arc_length(std::span<const Point2> points) {
  if (points.size() < 2) {
    throw ValidationError("points", "arc length needs at least two points");
  }
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
  return total;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return distance(p, a);
  const Point2 ap = p - a;
  const double u = std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0);
  return distance(p, a + u * ab);
}

bool polyline_hits_disc(std::span<const Point2> points, const Disc& disc) {
  if (points.size() == 1) return disc.contains(points[0]);
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (point_segment_distance(disc.center, points[i - 1], points[i]) <= disc.radius) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

void PlannerParams::validate() const {
  auto require = [](bool ok, const char* field, const char* msg) {
    if (!ok) throw ValidationError(field, msg);
  };
  require(std::isfinite(alpha_p) && alpha_p >= 0.0, "params.alpha_p", "must be >= 0");
  require(std::isfinite(alpha_e) && alpha_e >= 0.0, "params.alpha_e", "must be >= 0");
  require(r_min >= 0.0, "params.r_min", "must be >= 0");
  require(r_min < r_max, "params.r_max", "must exceed r_min");
  require(n_r >= 1, "params.n_r", "must be >= 1");
  require(n_theta >= 3, "params.n_theta", "must be >= 3");
  require(v_min > 0.0, "params.v_min", "must be > 0");
  require(v_min < v_max, "params.v_max", "must exceed v_min");
  require(p_max > 0.0, "params.p_max", "must be > 0");
  require(a_max > 0.0, "params.a_max", "must be > 0");
  require(max_samples >= 1, "params.max_samples", "must be >= 1");
  require(goal_bias >= 0.0 && goal_bias <= 1.0, "params.goal_bias", "must lie in [0, 1]");
  require(near_radius_gamma > 0.0, "params.near_radius_gamma", "must be > 0");
  require(step_len > 0.0, "params.step_len", "must be > 0");
  require(dt > 0.0, "params.dt", "must be > 0");
  require(n_vel_candidates >= 1, "params.n_vel_candidates", "must be >= 1");
  require(epsilon_fim > 0.0, "params.epsilon_fim", "must be > 0");
  require(smoothing_window >= 0, "params.smoothing_window", "must be >= 0");
}

// ---------------------------------------------------------------------------

FeatureMap::FeatureMap(std::vector<Point2> features, std::vector<Disc> obstacles, Bounds bounds)
    : features_(std::move(features)), obstacles_(std::move(obstacles)), bounds_(bounds) {
  build_index();
}

void FeatureMap::build_index() {
  const double w = std::max(bounds_.xmax - bounds_.xmin, 0.0);
  const double h = std::max(bounds_.ymax - bounds_.ymin, 0.0);
  nx_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(h / cell_)));
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const int cx = std::clamp(static_cast<int>((features_[i].x - bounds_.xmin) / cell_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((features_[i].y - bounds_.ymin) / cell_), 0, ny_ - 1);
    buckets_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(static_cast<std::uint32_t>(i));
  }
}

void FeatureMap::features_within(Point2 center, double radius, std::vector<std::size_t>& out) const {
  out.clear();
  if (features_.empty()) return;
  const int x0 = std::clamp(static_cast<int>(std::floor((center.x - radius - bounds_.xmin) / cell_)), 0, nx_ - 1);
  const int x1 = std::clamp(static_cast<int>(std::floor((center.x + radius - bounds_.xmin) / cell_)), 0, nx_ - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor((center.y - radius - bounds_.ymin) / cell_)), 0, ny_ - 1);
  const int y1 = std::clamp(static_cast<int>(std::floor((center.y + radius - bounds_.ymin) / cell_)), 0, ny_ - 1);
  const double r2 = radius * radius;
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      for (std::uint32_t idx : buckets_[static_cast<std::size_t>(cy) * nx_ + cx]) {
        const double dx = features_[idx].x - center.x;
        const double dy = features_[idx].y - center.y;
        if (dx * dx + dy * dy <= r2) out.push_back(idx);
      }
    }
  }
  std::sort(out.begin(), out.end());
}

bool FeatureMap::collides(Point2 p) const {
  return std::any_of(obstacles_.begin(), obstacles_.end(), [&](const Disc& d) { return d.contains(p); });
}

void FeatureMap::validate() const {
  if (!(bounds_.xmin < bounds_.xmax)) throw ValidationError("bounds.xmax", "must exceed xmin");
  if (!(bounds_.ymin < bounds_.ymax)) throw ValidationError("bounds.ymax", "must exceed ymin");
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!bounds_.contains(features_[i])) {
      throw ValidationError("features[" + std::to_string(i) + "]", "lies outside bounds");
    }
  }
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    if (!(obstacles_[i].radius > 0.0)) {
      throw ValidationError("obstacles[" + std::to_string(i) + "]", "radius must be > 0");
    }
  }
}

std::vector<UavState> Trajectory::states() const {
  std::vector<UavState> out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& st = segments[s].states;
    out.insert(out.end(), st.begin() + (s == 0 ? 0 : 1), st.end());
  }
  return out;
}

void Scenario::validate() const {
  params.validate();
  map.validate();
  if (!(goal.radius > 0.0)) throw ValidationError("goal.radius", "must be > 0");
  if (!(start.v >= 0.0)) throw ValidationError("start.v", "must be >= 0");
  if (start.v < params.v_min || start.v > params.v_max) {
    throw ValidationError("start.v", "must lie in [v_min, v_max]");
  }
  if (!map.bounds().contains(start.position())) throw ValidationError("start", "lies outside bounds");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

const char* metric_name(MetricKind k) {
  switch (k) {
    case MetricKind::kMinEigenvaluePosition: return "min_eigenvalue";
    case MetricKind::kMinEigenvalueFull: return "min_eigenvalue_full";
    case MetricKind::kDeterminant: return "determinant";
  }
  return "min_eigenvalue";
}

MetricKind metric_from_name(const std::string& s) {
  if (s == "min_eigenvalue") return MetricKind::kMinEigenvaluePosition;
  if (s == "min_eigenvalue_full") return MetricKind::kMinEigenvalueFull;
  if (s == "determinant") return MetricKind::kDeterminant;
  throw ValidationError("params.metric", "unknown metric '" + s + "'");
}

template <typename T>
T number_at(const json& j, const char* key, const std::string& field) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(field, "missing");
  if (!it->is_number()) throw ValidationError(field, "must be a number");
  return it->get<T>();
}

template <typename T>
void optional_number(const json& j, const char* key, T& dst) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number()) throw ValidationError(std::string("params.") + key, "must be a number");
  dst = it->get<T>();
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("scenario: top level must be an object");

  Scenario sc;
  sc.name = j.value("name", std::string{});

  PlannerParams& p = sc.params;
  if (j.contains("params")) {
    const json& jp = j.at("params");
    if (!jp.is_object()) throw ValidationError("params", "must be an object");
    optional_number(jp, "alpha_p", p.alpha_p);
    optional_number(jp, "alpha_e", p.alpha_e);
    optional_number(jp, "r_max", p.r_max);
    optional_number(jp, "r_min", p.r_min);
    optional_number(jp, "n_r", p.n_r);
    optional_number(jp, "n_theta", p.n_theta);
    optional_number(jp, "v_max", p.v_max);
    optional_number(jp, "v_min", p.v_min);
    optional_number(jp, "p_max", p.p_max);
    optional_number(jp, "a_max", p.a_max);
    optional_number(jp, "max_samples", p.max_samples);
    optional_number(jp, "goal_bias", p.goal_bias);
    optional_number(jp, "near_radius_gamma", p.near_radius_gamma);
    optional_number(jp, "step_len", p.step_len);
    optional_number(jp, "dt", p.dt);
    optional_number(jp, "n_vel_candidates", p.n_vel_candidates);
    optional_number(jp, "epsilon_fim", p.epsilon_fim);
    optional_number(jp, "rng_seed", p.rng_seed);
    optional_number(jp, "smoothing_window", p.smoothing_window);
    if (jp.contains("metric")) p.metric = metric_from_name(jp.at("metric").get<std::string>());
  }

  std::vector<Point2> features;
  if (j.contains("features")) {
    const json& jf = j.at("features");
    if (!jf.is_array()) throw ValidationError("features", "must be an array");
    for (std::size_t i = 0; i < jf.size(); ++i) {
      const json& e = jf[i];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw ValidationError("features[" + std::to_string(i) + "]", "must be [x, y]");
      }
      features.push_back({e[0].get<double>(), e[1].get<double>()});
    }
  }
  std::vector<Disc> obstacles;
  if (j.contains("obstacles")) {
    const json& jo = j.at("obstacles");
    if (!jo.is_array()) throw ValidationError("obstacles", "must be an array");
    for (std::size_t i = 0; i < jo.size(); ++i) {
      const json& e = jo[i];
      if (!e.is_array() || e.size() != 3) {
        throw ValidationError("obstacles[" + std::to_string(i) + "]", "must be [cx, cy, r]");
      }
      obstacles.push_back({{e[0].get<double>(), e[1].get<double>()}, e[2].get<double>()});
    }
  }

  if (!j.contains("start")) throw ValidationError("start", "missing");
  const json& js = j.at("start");
  sc.start.x = number_at<double>(js, "x", "start.x");
  sc.start.y = number_at<double>(js, "y", "start.y");
  sc.start.v = js.contains("v") ? number_at<double>(js, "v", "start.v") : p.v_min;

  if (!j.contains("goal")) throw ValidationError("goal", "missing");
  const json& jg = j.at("goal");
  sc.goal.center = {number_at<double>(jg, "cx", "goal.cx"), number_at<double>(jg, "cy", "goal.cy")};
  sc.goal.radius = number_at<double>(jg, "radius", "goal.radius");

  if (!j.contains("bounds")) throw ValidationError("bounds", "missing");
  const json& jb = j.at("bounds");
  Bounds b{number_at<double>(jb, "xmin", "bounds.xmin"), number_at<double>(jb, "xmax", "bounds.xmax"),
           number_at<double>(jb, "ymin", "bounds.ymin"), number_at<double>(jb, "ymax", "bounds.ymax")};

  sc.map = FeatureMap(std::move(features), std::move(obstacles), b);
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  json feats = json::array();
  for (const auto& f : sc.map.features()) feats.push_back({f.x, f.y});
  j["features"] = std::move(feats);
  json obs = json::array();
  for (const auto& o : sc.map.obstacles()) obs.push_back({o.center.x, o.center.y, o.radius});
  j["obstacles"] = std::move(obs);
  j["start"] = {{"x", sc.start.x}, {"y", sc.start.y}, {"v", sc.start.v}};
  j["goal"] = {{"cx", sc.goal.center.x}, {"cy", sc.goal.center.y}, {"radius", sc.goal.radius}};
  const auto& b = sc.map.bounds();
  j["bounds"] = {{"xmin", b.xmin}, {"xmax", b.xmax}, {"ymin", b.ymin}, {"ymax", b.ymax}};
  const PlannerParams& p = sc.params;
  j["params"] = {
      {"alpha_p", p.alpha_p},
      {"alpha_e", p.alpha_e},
      {"r_max", p.r_max},
      {"r_min", p.r_min},
      {"n_r", p.n_r},
      {"n_theta", p.n_theta},
      {"v_max", p.v_max},
      {"v_min", p.v_min},
      {"p_max", p.p_max},
      {"a_max", p.a_max},
      {"max_samples", p.max_samples},
      {"goal_bias", p.goal_bias},
      {"near_radius_gamma", p.near_radius_gamma},
      {"step_len", p.step_len},
      {"dt", p.dt},
      {"n_vel_candidates", p.n_vel_candidates},
      {"epsilon_fim", p.epsilon_fim},
      {"rng_seed", p.rng_seed},
      {"smoothing_window", p.smoothing_window},
      {"metric", metric_name(p.metric)},
  };
  return j.dump(2);
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write scenario file '" + path + "'");
  out << scenario_to_json(scenario) << '\n';
}

}  // namespace pep
