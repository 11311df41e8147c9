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

// Experiment drivers behind the command-line tool: bundled scenarios,
// reference models, alpha sweeps and receding-horizon reports.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pep/core.hpp"
#include "pep/energy.hpp"
#include "pep/planner.hpp"
#include "pep/uncertainty.hpp"

namespace pep {

// Scenarios --------------------------------------------------------------------

std::vector<std::string> bundled_scenario_names();

/// Throws ValidationError("scenario", ...) for unknown names.
Scenario bundled_scenario(const std::string& name);

/// A bundled scenario name, or else a path to a scenario JSON file.
Scenario resolve_scenario(const std::string& name_or_path);

// Reference models ---------------------------------------------------------------

inline constexpr std::uint64_t kDefaultUncertaintySeed = 7;
inline constexpr std::uint64_t kDefaultPowerSeed = 8;
inline constexpr int kDefaultResidualsPerSpeed = 500;

/// Motion model fitted to the reference residual dataset, with the default
/// distance term.
UncertaintyModels reference_uncertainty_models(std::uint64_t seed = kDefaultUncertaintySeed);
EnergyModel reference_energy_model(std::uint64_t seed = kDefaultPowerSeed);

// Alpha presets ------------------------------------------------------------------

struct AlphaPreset {
  std::string name;
  double alpha_p;
};

/// direct = 0, proposed = 4, hpq = 1000.
std::span<const AlphaPreset> alpha_presets();

/// Preset name or a non-negative number.
double parse_alpha(const std::string& text);

/// Preset name when the value matches one, otherwise the number.
std::string alpha_label(double alpha_p);

// Sweeps -------------------------------------------------------------------------

struct SeedRun {
  std::uint64_t seed = 0;
  bool success = false;
  double energy_j = 0.0;
  double perception_quality = 0.0;
  double duration_s = 0.0;
  std::string error;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for fewer than two values
};

MeanStd mean_std(std::span<const double> values);

struct RunReport {
  std::string scenario;
  double alpha_p = 0.0;
  std::vector<SeedRun> runs;
  /// Aggregates over successful runs only.
  MeanStd energy_j;
  MeanStd perception_quality;
  MeanStd duration_s;
  int n_failed = 0;

  /// Recomputes the aggregates from `runs`.
  void aggregate();
};

struct ModelSet {
  UncertaintyModels uncertainty;
  EnergyModel energy;
};

/// Plans once per seed; failures are recorded in the report, never dropped.
RunReport run_seeds(const Scenario& scenario, double alpha_p, std::span<const std::uint64_t> seeds,
                    const ModelSet& models);

/// Seeds first_seed, first_seed + 1, ...
std::vector<std::uint64_t> seed_range(std::uint64_t first_seed, int n_seeds);

std::string compare_markdown(std::span<const RunReport> reports);
std::string compare_csv(std::span<const RunReport> reports);

struct ReplanRun {
  std::uint64_t seed = 0;
  ReplanOutcome outcome;
};

struct ReplanReport {
  std::string scenario;
  double alpha_p = 0.0;
  double horizon = 0.0;
  std::vector<ReplanRun> runs;

  double success_rate() const;
};

ReplanReport run_replans(const Scenario& scenario, double alpha_p, std::span<const std::uint64_t> seeds,
                         double horizon, const DriftModel& drift, const ModelSet& models, int max_replans = 60);

/// Columns seed,success,final_drift,distance_travelled,n_replans,exceed_x,exceed_y,failure_reason.
std::string replan_summary_csv(const ReplanReport& report);
/// Columns seed,distance,drift,x,y,metric.
std::string drift_trace_csv(const ReplanReport& report);

/// Current UTC time as ISO-8601 with second resolution.
std::string iso8601_now();

}  // namespace pep
