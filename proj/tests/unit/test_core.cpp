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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pep/core.hpp"
#include "test_util.hpp"

using namespace pep;
using pep::testing::Gen;

namespace {

const char* kMinimalScenario = R"({
  "name": "tiny",
  "features": [[10, 5], [20, -3.5]],
  "start": {"x": 0, "y": 0, "v": 2},
  "goal": {"cx": 50, "cy": 0, "radius": 4},
  "bounds": {"xmin": -10, "xmax": 60, "ymin": -20, "ymax": 20}
})";

std::string field_of(const std::string& json_text) {
  try {
    parse_scenario(json_text);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("arc_length of simple polylines") {
  const std::vector<Point2> tri{{0, 0}, {3, 4}};
  CHECK(arc_length(tri) == doctest::Approx(5.0).epsilon(1e-15));
  const std::vector<Point2> line{{0, 0}, {1, 0}, {2, 0}};
  CHECK(arc_length(line) == 2.0);

  std::vector<Point2> quadrant;
  const int n = 2000;
  for (int i = 0; i <= n; ++i) {
    const double a = 0.5 * std::numbers::pi * i / n;
    quadrant.push_back({std::cos(a), std::sin(a)});
  }
  CHECK(std::abs(arc_length(quadrant) - std::numbers::pi / 2) < 1e-3);

  const std::vector<Point2> single{{1, 1}};
  CHECK_THROWS_AS(arc_length(single), ValidationError);
}

TEST_CASE("arc_length is invariant under rigid motion") {
  Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point2> pts(g.integer(2, 30));
    for (auto& p : pts) p = {g.uniform(-100, 100), g.uniform(-100, 100)};
    const double a = g.uniform(-std::numbers::pi, std::numbers::pi);
    const Point2 t{g.uniform(-1e3, 1e3), g.uniform(-1e3, 1e3)};
    std::vector<Point2> moved;
    for (const auto& p : pts) {
      moved.push_back({std::cos(a) * p.x - std::sin(a) * p.y + t.x, std::sin(a) * p.x + std::cos(a) * p.y + t.y});
    }
    const double l0 = arc_length(pts);
    CHECK(std::abs(arc_length(moved) - l0) <= 1e-9 * l0);
  }
}

TEST_CASE("point_segment_distance and disc hits") {
  CHECK(point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(point_segment_distance({3, 4}, {0, 0}, {0, 0}) == doctest::Approx(5.0));
  CHECK(point_segment_distance({5, 0}, {0, 0}, {2, 0}) == doctest::Approx(3.0));
  const std::vector<Point2> path{{0, 0}, {10, 0}};
  CHECK(polyline_hits_disc(path, {{5, 0.5}, 1.0}));
  CHECK_FALSE(polyline_hits_disc(path, {{5, 2.0}, 1.0}));
}

TEST_CASE("feature range query matches a linear scan") {
  Gen g(5);
  std::vector<Point2> feats(500);
  for (auto& f : feats) f = {g.uniform(-50, 150), g.uniform(-30, 70)};
  const FeatureMap map(feats, {}, Bounds{-50, 150, -30, 70});
  std::vector<std::size_t> got;
  for (int q = 0; q < 100; ++q) {
    const Point2 c{g.uniform(-60, 160), g.uniform(-40, 80)};
    const double r = g.uniform(0.5, 45);
    map.features_within(c, r, got);
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < feats.size(); ++i) {
      if (distance(c, feats[i]) <= r) want.push_back(i);
    }
    CHECK(got == want);
  }
}

TEST_CASE("scenario defaults and validation") {
  const Scenario s = parse_scenario(kMinimalScenario);
  CHECK(s.name == "tiny");
  CHECK(s.params.r_min == 5.0);
  CHECK(s.params.r_max == 41.0);
  CHECK(s.params.n_r == 6);
  CHECK(s.params.n_theta == 12);
  CHECK(s.params.alpha_p == 4.0);
  CHECK(s.start.v == 2.0);
  CHECK(s.map.features().size() == 2);
  CHECK(s.goal.radius == 4.0);

  std::string no_features = kMinimalScenario;
  no_features.replace(no_features.find("[[10, 5], [20, -3.5]]"), 21, "[]");
  CHECK(parse_scenario(no_features).map.features().empty());

  std::string zero_goal = kMinimalScenario;
  zero_goal.replace(zero_goal.find("\"radius\": 4"), 11, "\"radius\": 0");
  CHECK(field_of(zero_goal) == "goal.radius");

  std::string bad_rmin = kMinimalScenario;
  bad_rmin.insert(bad_rmin.rfind('}'), R"(, "params": {"r_min": 50})");
  CHECK_FALSE(field_of(bad_rmin).empty());

  std::string outside = kMinimalScenario;
  outside.replace(outside.find("[20, -3.5]"), 10, "[20, -35.0]");
  CHECK(field_of(outside) == "features[1]");

  CHECK_THROWS_AS(parse_scenario("{ not json"), ParseError);
  CHECK(field_of(R"({"goal": {"cx": 0, "cy": 0, "radius": 1}})") == "start");
}

TEST_CASE("scenario round-trip is bit-exact") {
  Gen g(3);
  for (int trial = 0; trial < 20; ++trial) {
    Scenario s;
    s.name = "rt" + std::to_string(trial);
    std::vector<Point2> feats(g.integer(0, 40));
    for (auto& f : feats) f = {g.uniform(-100, 100), g.uniform(-100, 100)};
    s.map = FeatureMap(feats, {Disc{{g.uniform(-50, 50), g.uniform(-50, 50)}, g.uniform(0.1, 5)}},
                       Bounds{-100, 100, -100, 100});
    s.start = {g.uniform(-90, 90), g.uniform(-90, 90), g.uniform(1, 10), 0, 0, 0};
    s.goal = {{g.uniform(-90, 90), g.uniform(-90, 90)}, g.uniform(0.1, 10)};
    s.params.alpha_p = g.uniform(0, 1000);
    s.params.dt = g.uniform(0.01, 0.5);
    s.params.epsilon_fim = g.uniform(1e-6, 1e-2);
    s.params.rng_seed = static_cast<std::uint64_t>(g.integer(0, 1 << 30)) << 20;
    s.params.metric = MetricKind::kDeterminant;
    const Scenario back = parse_scenario(scenario_to_json(s));
    CHECK(back.name == s.name);
    CHECK(back.map == s.map);
    CHECK(back.start == s.start);
    CHECK(back.goal == s.goal);
    CHECK(back.params == s.params);
  }
}

TEST_CASE("scenario save and load through a file") {
  pep::testing::ScratchDir dir("core");
  const Scenario s = parse_scenario(kMinimalScenario);
  save_scenario(s, dir.file("s.json"));
  const Scenario back = load_scenario(dir.file("s.json"));
  CHECK(back.map == s.map);
  CHECK(back.params == s.params);
  CHECK_THROWS_AS(load_scenario(dir.file("missing.json")), ParseError);
}

TEST_CASE("trajectory states share join points once") {
  Trajectory t;
  TrajectorySegment a;
  a.states = {{0, 0, 1, 0, 0, 0}, {1, 0, 1, 0, 0, 1}};
  TrajectorySegment b;
  b.states = {{1, 0, 1, 0, 0, 1}, {2, 0, 1, 0, 0, 2}, {3, 0, 1, 0, 0, 3}};
  t.segments = {a, b};
  const auto st = t.states();
  REQUIRE(st.size() == 4);
  CHECK(st[3].x == 3.0);
}
