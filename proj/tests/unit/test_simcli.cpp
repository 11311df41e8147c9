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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pep/simcli.hpp"
#include "test_util.hpp"

using namespace pep;

namespace {

const ModelSet& models() {
  static const ModelSet m{reference_uncertainty_models(), reference_energy_model()};
  return m;
}

Scenario open_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "open";
  s.map = FeatureMap({}, {}, Bounds{-10, 110, -50, 50});
  s.start = {0, 0, 1, 0, 0, 0};
  s.goal = {{100, 0}, 6};
  s.params.max_samples = 300;
  s.params.rng_seed = seed;
  return s;
}

struct Row {
  double t, x, y, v, cp, ce;
};

std::vector<Row> read_rows(const std::string& path) {
  std::istringstream in(pep::testing::slurp(path));
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "t,x,y,v,c_p_cum,c_e_cum");
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    Row r{};
    char c;
    std::istringstream ls(line);
    ls >> r.t >> c >> r.x >> c >> r.y >> c >> r.v >> c >> r.cp >> c >> r.ce;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("bundled scenarios") {
  for (const auto& name : bundled_scenario_names()) {
    const Scenario s = bundled_scenario(name);
    CHECK(s.name == name);
    CHECK_NOTHROW(s.validate());
    CHECK_FALSE(s.map.features().empty());
    CHECK_FALSE(s.goal.contains(s.start.position()));
    CHECK(s.map.features() == bundled_scenario(name).map.features());
  }
  try {
    bundled_scenario("nope");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "scenario");
  }
  CHECK_THROWS_AS(resolve_scenario("/nonexistent/scenario.json"), ParseError);
}

TEST_CASE("alpha presets") {
  CHECK(parse_alpha("direct") == 0.0);
  CHECK(parse_alpha("proposed") == 4.0);
  CHECK(parse_alpha("hpq") == 1000.0);
  CHECK(parse_alpha("2.5") == 2.5);
  CHECK_THROWS_AS(parse_alpha("-1"), ValidationError);
  CHECK_THROWS_AS(parse_alpha("fast"), ValidationError);
  CHECK(alpha_label(4.0) == "proposed");
  CHECK(alpha_label(2.5) == "2.5");
}

TEST_CASE("mean and sample deviation") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanStd m = mean_std(v);
  CHECK(m.mean == 2.5);
  CHECK(m.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(mean_std(std::vector<double>{7.0}).std == 0.0);
  CHECK(mean_std(std::vector<double>{}).mean == 0.0);
  CHECK_THROWS_AS(seed_range(1, 0), ValidationError);
  CHECK(seed_range(5, 3) == std::vector<std::uint64_t>{5, 6, 7});
}

TEST_CASE("energy-only plan on an open map stays near the straight line") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Scenario s = open_scenario(seed);
    s.params.alpha_p = 0.0;
    const auto r = plan(s, models().uncertainty, models().energy);
    double worst = 0.0;
    for (const auto& st : r.trajectory.states()) worst = std::max(worst, std::abs(st.y));
    CHECK(worst < 2.0 * s.params.step_len);
  }
}

TEST_CASE("trajectory files agree with the summary") {
  pep::testing::ScratchDir dir("simcli");
  Scenario s = bundled_scenario("scenario2");
  s.params.max_samples = 300;
  s.params.rng_seed = 4;
  const auto r = plan(s, models().uncertainty, models().energy);
  write_trajectory_csv(dir.file("trajectory.csv"), r.trajectory, models().energy, s.params);
  const auto rows = read_rows(dir.file("trajectory.csv"));
  REQUIRE(rows.size() == r.trajectory.states().size());
  CHECK(rows.back().ce * s.params.p_max == doctest::Approx(r.trajectory.total_energy).epsilon(1e-9));

  // Trapezoidal re-integration of power over the sampled speeds.
  const EnergyModel& e = models().energy;
  double joules = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double dt = rows[i].t - rows[i - 1].t;
    const double dv = rows[i].v - rows[i - 1].v;
    const FlightMode mode = dv > 0 ? FlightMode::kAccel : dv < 0 ? FlightMode::kDecel : FlightMode::kConstant;
    joules += 0.5 * dt * (e.power(mode, rows[i - 1].v) + e.power(mode, rows[i].v));
  }
  CHECK(std::abs(joules - r.trajectory.total_energy) < 0.01 * r.trajectory.total_energy);

  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].t > rows[i - 1].t);
    CHECK(rows[i].cp >= rows[i - 1].cp);
    CHECK(rows[i].ce >= rows[i - 1].ce);
  }

  const auto j = nlohmann::json::parse(trajectory_summary_json(r.trajectory, "2026-01-01T00:00:00Z"));
  CHECK(j.at("total_energy_J").get<double>() == r.trajectory.total_energy);
  CHECK(j.at("n_segments").get<std::size_t>() == r.trajectory.segments.size());
  CHECK(j.at("generated_at").get<std::string>() == "2026-01-01T00:00:00Z");
  CHECK(trajectory_summary_json(r.trajectory, "x") == trajectory_summary_json(r.trajectory, "x"));
}

TEST_CASE("sweep reports keep failures") {
  Scenario blocked = open_scenario(1);
  blocked.map = FeatureMap({}, {Disc{{100, 0}, 20}}, blocked.map.bounds());
  blocked.params.max_samples = 30;
  const auto seeds = seed_range(1, 2);
  const RunReport bad = run_seeds(blocked, 0.0, seeds, models());
  CHECK(bad.n_failed == 2);
  REQUIRE(bad.runs.size() == 2);
  CHECK_FALSE(bad.runs[0].success);
  CHECK_FALSE(bad.runs[0].error.empty());

  Scenario ok = open_scenario(1);
  ok.params.max_samples = 100;
  const RunReport good = run_seeds(ok, 0.0, seeds, models());
  CHECK(good.n_failed == 0);
  CHECK(good.energy_j.mean > 0.0);

  const std::vector<RunReport> one{good};
  const std::string md = compare_markdown(one);
  CHECK(std::count(md.begin(), md.end(), '\n') == 3);
  CHECK(md.find("| open | direct | 0 |") != std::string::npos);

  const std::vector<RunReport> both{good, bad};
  const std::string csv = compare_csv(both);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find(",0,0,0,0,") != std::string::npos);
  CHECK(compare_markdown(both).find("| 2/2 |") != std::string::npos);
}

TEST_CASE("replan reports") {
  Scenario s = bundled_scenario("validation");
  s.params.max_samples = 150;
  const auto seeds = seed_range(1, 1);
  const ReplanReport r = run_replans(s, 0.0, seeds, 30.0, DriftModel{1e-3, 2.0}, models());
  REQUIRE(r.runs.size() == 1);
  const auto& o = r.runs[0].outcome;
  CHECK_FALSE(o.success);
  REQUIRE(o.exceed_point.has_value());
  CHECK(r.success_rate() == 0.0);
  for (std::size_t i = 1; i < o.trace.size(); ++i) CHECK(o.trace[i].drift >= o.trace[i - 1].drift);

  const std::string summary = replan_summary_csv(r);
  CHECK(summary.rfind("seed,success,final_drift,distance_travelled,n_replans,exceed_x,exceed_y,failure_reason\n", 0) == 0);
  CHECK(summary.find("drift limit exceeded") != std::string::npos);
  const std::string trace = drift_trace_csv(r);
  CHECK(static_cast<std::size_t>(std::count(trace.begin(), trace.end(), '\n')) == o.trace.size() + 1);
}

TEST_CASE("timestamps") {
  const std::string t = iso8601_now();
  CHECK(t.size() == 20);
  CHECK(t[4] == '-');
  CHECK(t[10] == 'T');
  CHECK(t.back() == 'Z');
}
