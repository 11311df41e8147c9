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

#include "pep/simcli.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numbers>
#include <random>
#include <sstream>

#include "csv_util.hpp"

namespace pep {

namespace {

using detail::format_double;

// Features scattered in a band of half-width `half_width` around the
// polyline, roughly one per `spacing` metres of centreline.
void add_band(std::vector<Point2>& out, std::span<const Point2> line, double spacing, double half_width,
              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lateral(-half_width, half_width);
  std::uniform_real_distribution<double> along(-0.3 * spacing, 0.3 * spacing);
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Point2 a = line[i];
    const Point2 b = line[i + 1];
    const double len = distance(a, b);
    const Point2 dir = (1.0 / len) * (b - a);
    const Point2 nrm{-dir.y, dir.x};
    const int n = std::max(1, static_cast<int>(std::round(len / spacing)));
    for (int k = 0; k < n; ++k) {
      const double s = std::clamp((k + 0.5) * len / n + along(rng), 0.0, len);
      out.push_back(a + s * dir + lateral(rng) * nrm);
    }
  }
}

void add_cluster(std::vector<Point2>& out, Point2 center, double radius, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < n; ++k) {
    const double r = radius * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    out.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
}

Scenario make_scenario1() {
  std::mt19937_64 rng(101);
  std::vector<Point2> features;
  const std::array<Point2, 3> wall{Point2{30.0, 48.0}, Point2{165.0, 48.0}, Point2{165.0, 18.0}};
  add_band(features, wall, 2.5, 2.0, rng);
  Scenario s;
  s.name = "scenario1";
  s.map = FeatureMap(std::move(features), {}, Bounds{-20.0, 220.0, -60.0, 100.0});
  s.start = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
  s.goal = {{200.0, 0.0}, 8.0};
  return s;
}

Scenario make_scenario2() {
  std::mt19937_64 rng(202);
  std::vector<Point2> features;
  add_cluster(features, {65.0, 42.0}, 12.0, 60, rng);
  add_cluster(features, {135.0, -42.0}, 12.0, 60, rng);
  Scenario s;
  s.name = "scenario2";
  s.map = FeatureMap(std::move(features), {}, Bounds{-20.0, 220.0, -80.0, 80.0});
  s.start = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
  s.goal = {{200.0, 0.0}, 8.0};
  return s;
}

Scenario make_validation() {
  std::mt19937_64 rng(303);
  std::vector<Point2> features;
  const std::array<Point2, 4> trail{Point2{-5.0, 5.0}, Point2{40.0, 55.0}, Point2{160.0, 55.0}, Point2{205.0, 5.0}};
  add_band(features, trail, 3.0, 8.0, rng);
  Scenario s;
  s.name = "validation";
  s.map = FeatureMap(std::move(features), {}, Bounds{-20.0, 220.0, -30.0, 80.0});
  s.start = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
  s.goal = {{200.0, 0.0}, 8.0};
  return s;
}

}  // namespace

std::vector<std::string> bundled_scenario_names() { return {"scenario1", "scenario2", "validation"}; }

Scenario bundled_scenario(const std::string& name) {
  if (name == "scenario1") return make_scenario1();
  if (name == "scenario2") return make_scenario2();
  if (name == "validation") return make_validation();
  throw ValidationError("scenario", "unknown bundled scenario '" + name + "'");
}

Scenario resolve_scenario(const std::string& name_or_path) {
  for (const auto& n : bundled_scenario_names()) {
    if (n == name_or_path) return bundled_scenario(n);
  }
  return load_scenario(name_or_path);
}

UncertaintyModels reference_uncertainty_models(std::uint64_t seed) {
  const auto data = generate_reference_dataset(kDefaultResidualsPerSpeed, reference_uncertainty_speeds(), seed);
  return {fit_motion_model(data), DistanceUncertaintyModel{}};
}

EnergyModel reference_energy_model(std::uint64_t seed) {
  return fit_energy_model(generate_reference_power_dataset(seed));
}

std::span<const AlphaPreset> alpha_presets() {
  static const std::array<AlphaPreset, 3> presets{
      AlphaPreset{"direct", 0.0}, AlphaPreset{"proposed", 4.0}, AlphaPreset{"hpq", 1000.0}};
  return presets;
}

double parse_alpha(const std::string& text) {
  for (const auto& p : alpha_presets()) {
    if (p.name == text) return p.alpha_p;
  }
  double v = 0.0;
  try {
    v = detail::parse_double(text, "alpha_p");
  } catch (const ParseError&) {
    throw ValidationError("alpha_p", "expected direct, proposed, hpq or a number, got '" + text + "'");
  }
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("alpha_p", "must be a finite value >= 0");
  return v;
}

std::string alpha_label(double alpha_p) {
  for (const auto& p : alpha_presets()) {
    if (p.alpha_p == alpha_p) return p.name;
  }
  return format_double(alpha_p);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / (values.size() - 1));
  }
  return out;
}

void RunReport::aggregate() {
  std::vector<double> e, q, d;
  n_failed = 0;
  for (const auto& r : runs) {
    if (!r.success) {
      ++n_failed;
      continue;
    }
    e.push_back(r.energy_j);
    q.push_back(r.perception_quality);
    d.push_back(r.duration_s);
  }
  energy_j = mean_std(e);
  perception_quality = mean_std(q);
  duration_s = mean_std(d);
}

std::vector<std::uint64_t> seed_range(std::uint64_t first_seed, int n_seeds) {
  if (n_seeds < 1) throw ValidationError("n_seeds", "must be >= 1");
  std::vector<std::uint64_t> out(n_seeds);
  for (int i = 0; i < n_seeds; ++i) out[i] = first_seed + static_cast<std::uint64_t>(i);
  return out;
}

RunReport run_seeds(const Scenario& scenario, double alpha_p, std::span<const std::uint64_t> seeds,
                    const ModelSet& models) {
  RunReport report;
  report.scenario = scenario.name;
  report.alpha_p = alpha_p;
  for (std::uint64_t seed : seeds) {
    Scenario s = scenario;
    s.params.alpha_p = alpha_p;
    s.params.rng_seed = seed;
    SeedRun run;
    run.seed = seed;
    try {
      const PlanResult r = plan(s, models.uncertainty, models.energy);
      run.success = true;
      run.energy_j = r.trajectory.total_energy;
      run.perception_quality = r.trajectory.total_perception;
      run.duration_s = r.trajectory.duration;
    } catch (const PlanningError& e) {
      run.error = e.what();
    }
    report.runs.push_back(std::move(run));
  }
  report.aggregate();
  return report;
}

std::string compare_markdown(std::span<const RunReport> reports) {
  std::ostringstream os;
  os << "| scenario | planner | alpha_p | energy [kJ] | perception quality [x1e3] | duration [s] | failed |\n";
  os << "|---|---|---|---|---|---|---|\n";
  os.setf(std::ios::fixed);
  for (const auto& r : reports) {
    os.precision(2);
    os << "| " << r.scenario << " | " << alpha_label(r.alpha_p) << " | " << format_double(r.alpha_p) << " | "
       << r.energy_j.mean / 1e3 << " +- " << r.energy_j.std / 1e3 << " | " << r.perception_quality.mean / 1e3
       << " +- " << r.perception_quality.std / 1e3 << " | " << r.duration_s.mean << " +- " << r.duration_s.std
       << " | " << r.n_failed << "/" << r.runs.size() << " |\n";
  }
  return os.str();
}

std::string compare_csv(std::span<const RunReport> reports) {
  std::ostringstream os;
  os << "scenario,planner,alpha_p,seed,success,energy_J,perception_quality,duration_s,error\n";
  for (const auto& r : reports) {
    for (const auto& run : r.runs) {
      std::string err = run.error;
      std::replace(err.begin(), err.end(), ',', ';');
      os << r.scenario << ',' << alpha_label(r.alpha_p) << ',' << format_double(r.alpha_p) << ',' << run.seed << ','
         << (run.success ? 1 : 0) << ',' << format_double(run.energy_j) << ','
         << format_double(run.perception_quality) << ',' << format_double(run.duration_s) << ',' << err << '\n';
    }
  }
  return os.str();
}

double ReplanReport::success_rate() const {
  if (runs.empty()) return 0.0;
  int ok = 0;
  for (const auto& r : runs) ok += r.outcome.success ? 1 : 0;
  return static_cast<double>(ok) / runs.size();
}

ReplanReport run_replans(const Scenario& scenario, double alpha_p, std::span<const std::uint64_t> seeds,
                         double horizon, const DriftModel& drift, const ModelSet& models, int max_replans) {
  ReplanReport report;
  report.scenario = scenario.name;
  report.alpha_p = alpha_p;
  report.horizon = horizon;
  for (std::uint64_t seed : seeds) {
    Scenario s = scenario;
    s.params.alpha_p = alpha_p;
    s.params.rng_seed = seed;
    report.runs.push_back({seed, replan_loop(s, horizon, drift, models.uncertainty, models.energy, max_replans)});
  }
  return report;
}

std::string replan_summary_csv(const ReplanReport& report) {
  std::ostringstream os;
  os << "seed,success,final_drift,distance_travelled,n_replans,exceed_x,exceed_y,failure_reason\n";
  for (const auto& r : report.runs) {
    const auto& o = r.outcome;
    os << r.seed << ',' << (o.success ? 1 : 0) << ',' << format_double(o.final_drift) << ','
       << format_double(o.distance_travelled) << ',' << o.n_replans << ','
       << (o.exceed_point ? format_double(o.exceed_point->x) : "") << ','
       << (o.exceed_point ? format_double(o.exceed_point->y) : "") << ',' << o.failure_reason << '\n';
  }
  return os.str();
}

std::string drift_trace_csv(const ReplanReport& report) {
  std::ostringstream os;
  os << "seed,distance,drift,x,y,metric\n";
  for (const auto& r : report.runs) {
    for (const auto& s : r.outcome.trace) {
      os << r.seed << ',' << format_double(s.distance) << ',' << format_double(s.drift) << ',' << format_double(s.x)
         << ',' << format_double(s.y) << ',' << format_double(s.metric) << '\n';
    }
  }
  return os.str();
}

std::string iso8601_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace pep
