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

#include "pep/pep.h"

#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pep/simcli.hpp"

struct pep_scenario {
  pep::Scenario scenario;
};

struct pep_models {
  pep::ModelSet set;
};

struct pep_trajectory {
  pep::Trajectory trajectory;
  pep::ModelSet models;
  pep::Scenario scenario;
};

static_assert(PEP_DEFAULT_UNCERTAINTY_SEED == pep::kDefaultUncertaintySeed);
static_assert(PEP_DEFAULT_POWER_SEED == pep::kDefaultPowerSeed);

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

pep_log_fn g_log = nullptr;
void* g_log_user = nullptr;

pep_status fail(pep_status status, std::string message, std::string field = {}) {
  g_error = std::move(message);
  g_field = std::move(field);
  return status;
}

// Runs `body` and maps exceptions to status codes.
template <typename F>
pep_status guarded(F&& body) {
  g_error.clear();
  g_field.clear();
  try {
    body();
    return PEP_OK;
  } catch (const pep::GoalUnreachableError& e) {
    return fail(PEP_ERR_GOAL_UNREACHABLE, e.what());
  } catch (const pep::PlanningError& e) {
    return fail(PEP_ERR_PLANNING, e.what());
  } catch (const pep::ValidationError& e) {
    return fail(PEP_ERR_VALIDATION, e.what(), e.field());
  } catch (const pep::ParseError& e) {
    return fail(PEP_ERR_PARSE, e.what());
  } catch (const pep::FitError& e) {
    return fail(PEP_ERR_FIT, e.what());
  } catch (const pep::RampTooLongError& e) {
    return fail(PEP_ERR_VALIDATION, e.what(), "d");
  } catch (const pep::Error& e) {
    return fail(PEP_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PEP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PEP_ERR_INTERNAL, e.what());
  }
}

#define PEP_REQUIRE(cond, name)                                                   \
  do {                                                                            \
    if (!(cond)) return fail(PEP_ERR_INVALID_ARGUMENT, name " must not be NULL"); \
  } while (0)

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw pep::Error("cannot create directory '" + dir + "': " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw pep::Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pep::Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

extern "C" {

const char* pep_version(void) { return "1.0.0"; }

const char* pep_status_name(pep_status status) {
  switch (status) {
    case PEP_OK: return "ok";
    case PEP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PEP_ERR_PARSE: return "parse error";
    case PEP_ERR_VALIDATION: return "validation error";
    case PEP_ERR_FIT: return "fit error";
    case PEP_ERR_PLANNING: return "planning error";
    case PEP_ERR_GOAL_UNREACHABLE: return "goal unreachable";
    case PEP_ERR_IO: return "i/o error";
    case PEP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pep_last_error(void) { return g_error.c_str(); }
const char* pep_last_error_field(void) { return g_field.c_str(); }

void pep_set_log_callback(pep_log_fn fn, void* user) {
  g_log = fn;
  g_log_user = user;
}

pep_status pep_parse_alpha(const char* text, double* alpha_p) {
  PEP_REQUIRE(text, "text");
  PEP_REQUIRE(alpha_p, "alpha_p");
  return guarded([&] { *alpha_p = pep::parse_alpha(text); });
}

// Scenarios -------------------------------------------------------------------

pep_status pep_scenario_open(const char* name_or_path, pep_scenario** out) {
  PEP_REQUIRE(name_or_path, "name_or_path");
  PEP_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] { *out = new pep_scenario{pep::resolve_scenario(name_or_path)}; });
}

pep_status pep_scenario_parse(const char* json_text, pep_scenario** out) {
  PEP_REQUIRE(json_text, "json_text");
  PEP_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] { *out = new pep_scenario{pep::parse_scenario(json_text)}; });
}

pep_status pep_scenario_save(const pep_scenario* scenario, const char* path) {
  PEP_REQUIRE(scenario, "scenario");
  PEP_REQUIRE(path, "path");
  return guarded([&] { pep::save_scenario(scenario->scenario, path); });
}

pep_status pep_scenario_set_alpha_p(pep_scenario* scenario, double alpha_p) {
  PEP_REQUIRE(scenario, "scenario");
  return guarded([&] {
    pep::PlannerParams p = scenario->scenario.params;
    p.alpha_p = alpha_p;
    p.validate();
    scenario->scenario.params = p;
  });
}

pep_status pep_scenario_set_seed(pep_scenario* scenario, uint64_t seed) {
  PEP_REQUIRE(scenario, "scenario");
  scenario->scenario.params.rng_seed = seed;
  return PEP_OK;
}

pep_status pep_scenario_set_max_samples(pep_scenario* scenario, int max_samples) {
  PEP_REQUIRE(scenario, "scenario");
  return guarded([&] {
    pep::PlannerParams p = scenario->scenario.params;
    p.max_samples = max_samples;
    p.validate();
    scenario->scenario.params = p;
  });
}

pep_status pep_scenario_name(const pep_scenario* scenario, const char** name) {
  PEP_REQUIRE(scenario, "scenario");
  PEP_REQUIRE(name, "name");
  *name = scenario->scenario.name.c_str();
  return PEP_OK;
}

void pep_scenario_free(pep_scenario* scenario) { delete scenario; }

// Models ----------------------------------------------------------------------

pep_status pep_models_reference(uint64_t uncertainty_seed, uint64_t power_seed, pep_models** out) {
  PEP_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    *out = new pep_models{{pep::reference_uncertainty_models(uncertainty_seed), pep::reference_energy_model(power_seed)}};
  });
}

pep_status pep_models_load(const char* const* paths, size_t n_paths, pep_models** out) {
  PEP_REQUIRE(out, "out");
  PEP_REQUIRE(paths || n_paths == 0, "paths");
  *out = nullptr;
  return guarded([&] {
    std::optional<pep::UncertaintyModels> unc;
    std::optional<pep::EnergyModel> energy;
    for (size_t i = 0; i < n_paths; ++i) {
      if (!paths[i]) throw pep::ValidationError("models", "NULL path");
      const std::string text = read_text(paths[i]);
      std::string format;
      try {
        format = nlohmann::json::parse(text).value("format", std::string{});
      } catch (const nlohmann::json::exception& e) {
        throw pep::ParseError(std::string(paths[i]) + ": " + e.what());
      }
      if (format == "pep-uncertainty-model") {
        if (unc) throw pep::ValidationError("models", "two uncertainty models given");
        unc = pep::uncertainty_model_from_json(text);
      } else if (format == "pep-energy-model") {
        if (energy) throw pep::ValidationError("models", "two energy models given");
        energy = pep::energy_model_from_json(text);
      } else {
        throw pep::ParseError(std::string(paths[i]) + ": unrecognised model format '" + format + "'");
      }
    }
    if (!unc) unc = pep::reference_uncertainty_models();
    if (!energy) energy = pep::reference_energy_model();
    *out = new pep_models{{std::move(*unc), std::move(*energy)}};
  });
}

pep_status pep_models_sensor_noise(const pep_models* models, double v, double d, double* mu, double* sigma) {
  PEP_REQUIRE(models, "models");
  PEP_REQUIRE(mu, "mu");
  PEP_REQUIRE(sigma, "sigma");
  return guarded([&] {
    const pep::SensorNoise n = pep::sensor_noise(models->set.uncertainty, v, d);
    *mu = n.mu;
    *sigma = n.sigma;
  });
}

pep_status pep_models_segment_energy(const pep_models* models, double v_cur, double v_tmp, double d, double a_max,
                                     double p_max, double* c_e, double* energy_j) {
  PEP_REQUIRE(models, "models");
  return guarded([&] {
    const pep::SegmentEnergy e = pep::segment_energy_cost(models->set.energy, v_cur, v_tmp, d, a_max, p_max);
    if (c_e) *c_e = e.c_e;
    if (energy_j) *energy_j = e.energy_j;
  });
}

void pep_models_free(pep_models* models) { delete models; }

// Datasets and fitting ----------------------------------------------------------

pep_status pep_generate_data(pep_data_kind kind, const char* out_path, uint64_t seed, int n_per_speed) {
  PEP_REQUIRE(out_path, "out_path");
  return guarded([&] {
    if (kind == PEP_DATA_UNCERTAINTY) {
      const int n = n_per_speed > 0 ? n_per_speed : pep::kDefaultResidualsPerSpeed;
      const auto data = pep::generate_reference_dataset(n, pep::reference_uncertainty_speeds(), seed);
      pep::write_uncertainty_csv(out_path, data,
                                 pep::ReferenceUncertaintyLaw::describe() + " seed=" + std::to_string(seed) +
                                     " n_per_speed=" + std::to_string(n));
    } else if (kind == PEP_DATA_POWER) {
      const auto data = n_per_speed > 0 ? pep::generate_reference_power_dataset(seed, n_per_speed)
                                        : pep::generate_reference_power_dataset(seed);
      pep::write_power_csv(out_path, data, pep::ReferencePowerLaw::describe() + " seed=" + std::to_string(seed));
    } else {
      throw pep::ValidationError("kind", "unknown data kind");
    }
  });
}

pep_status pep_fit(pep_data_kind kind, const char* data_path, const char* out_path, double* coverage) {
  PEP_REQUIRE(data_path, "data_path");
  PEP_REQUIRE(out_path, "out_path");
  return guarded([&] {
    if (kind == PEP_DATA_UNCERTAINTY) {
      const auto data = pep::read_uncertainty_csv(data_path);
      const pep::UncertaintyModels models{pep::fit_motion_model(data), pep::DistanceUncertaintyModel{}};
      pep::save_uncertainty_model(models, out_path);
      if (coverage) *coverage = models.motion.fit_report().heldout_coverage;
    } else if (kind == PEP_DATA_POWER) {
      pep::save_energy_model(pep::fit_energy_model(pep::read_power_csv(data_path)), out_path);
    } else {
      throw pep::ValidationError("kind", "unknown data kind");
    }
  });
}

// Planning ----------------------------------------------------------------------

pep_status pep_plan(const pep_scenario* scenario, const pep_models* models, pep_trajectory** out) {
  PEP_REQUIRE(scenario, "scenario");
  PEP_REQUIRE(models, "models");
  PEP_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    pep::PlanOptions options;
    if (g_log) {
      pep_log_fn fn = g_log;
      void* user = g_log_user;
      options.log = [fn, user](const std::string& line) { fn(line.c_str(), user); };
    }
    pep::PlanResult r = pep::plan(scenario->scenario, models->set.uncertainty, models->set.energy, options);
    *out = new pep_trajectory{std::move(r.trajectory), models->set, scenario->scenario};
  });
}

pep_status pep_trajectory_summary(const pep_trajectory* trajectory, pep_summary* out) {
  PEP_REQUIRE(trajectory, "trajectory");
  PEP_REQUIRE(out, "out");
  const auto& t = trajectory->trajectory;
  out->total_energy_j = t.total_energy;
  out->total_perception = t.total_perception;
  out->duration_s = t.duration;
  out->n_samples_used = t.n_samples_used;
  out->n_segments = static_cast<int>(t.segments.size());
  out->n_states = t.states().size();
  return PEP_OK;
}

pep_status pep_trajectory_states(const pep_trajectory* trajectory, pep_state* buffer, size_t capacity,
                                 size_t* n_states) {
  PEP_REQUIRE(trajectory, "trajectory");
  PEP_REQUIRE(n_states, "n_states");
  PEP_REQUIRE(buffer || capacity == 0, "buffer");
  const auto states = trajectory->trajectory.states();
  *n_states = states.size();
  for (size_t i = 0; i < states.size() && i < capacity; ++i) {
    buffer[i] = {states[i].x, states[i].y, states[i].v, states[i].t};
  }
  return PEP_OK;
}

pep_status pep_trajectory_write(const pep_trajectory* trajectory, const char* out_dir, const char* timestamp) {
  PEP_REQUIRE(trajectory, "trajectory");
  PEP_REQUIRE(out_dir, "out_dir");
  return guarded([&] {
    ensure_dir(out_dir);
    const std::filesystem::path dir(out_dir);
    const auto& t = trajectory->trajectory;
    const auto& params = trajectory->scenario.params;
    pep::write_trajectory_csv((dir / "trajectory.csv").string(), t, trajectory->models.energy, params);
    write_text(dir / "summary.json",
               pep::trajectory_summary_json(t, timestamp ? std::string(timestamp) : pep::iso8601_now()) + "\n");
    std::vector<pep::UavState> states;
    std::vector<double> metric;
    for (std::size_t s = 0; s < t.segments.size(); ++s) {
      const auto& seg = t.segments[s];
      for (std::size_t i = (s == 0 ? 0 : 1); i < seg.states.size(); ++i) {
        states.push_back(seg.states[i]);
        metric.push_back(seg.metric[i]);
      }
    }
    pep::write_metric_csv((dir / "fim_metric.csv").string(), states, metric);
  });
}

void pep_trajectory_free(pep_trajectory* trajectory) { delete trajectory; }

// Experiments -------------------------------------------------------------------

pep_status pep_compare(const pep_scenario* const* scenarios, size_t n_scenarios, const double* alphas,
                       size_t n_alphas, int n_seeds, uint64_t first_seed, const pep_models* models,
                       const char* out_dir) {
  PEP_REQUIRE(scenarios, "scenarios");
  PEP_REQUIRE(alphas, "alphas");
  PEP_REQUIRE(models, "models");
  PEP_REQUIRE(out_dir, "out_dir");
  if (n_scenarios == 0 || n_alphas == 0) return fail(PEP_ERR_INVALID_ARGUMENT, "need at least one scenario and alpha");
  return guarded([&] {
    const auto seeds = pep::seed_range(first_seed, n_seeds);
    std::vector<pep::RunReport> reports;
    for (size_t s = 0; s < n_scenarios; ++s) {
      if (!scenarios[s]) throw pep::ValidationError("scenarios", "NULL scenario");
      for (size_t a = 0; a < n_alphas; ++a) {
        if (!(alphas[a] >= 0.0)) throw pep::ValidationError("alpha_p", "must be >= 0");
        reports.push_back(pep::run_seeds(scenarios[s]->scenario, alphas[a], seeds, models->set));
      }
    }
    ensure_dir(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text(dir / "compare.md", pep::compare_markdown(reports));
    write_text(dir / "compare.csv", pep::compare_csv(reports));
  });
}

pep_replan_options pep_replan_defaults(void) {
  const pep::DriftModel d;
  return {30.0, d.k_drift, d.drift_limit, 60};
}

pep_status pep_replan(const pep_scenario* scenario, const pep_models* models, double alpha_p, int n_seeds,
                      uint64_t first_seed, const pep_replan_options* options, const char* out_dir,
                      double* success_rate) {
  PEP_REQUIRE(scenario, "scenario");
  PEP_REQUIRE(models, "models");
  PEP_REQUIRE(out_dir, "out_dir");
  return guarded([&] {
    const pep_replan_options opt = options ? *options : pep_replan_defaults();
    if (!(opt.k_drift > 0.0)) throw pep::ValidationError("k_drift", "must be > 0");
    if (!(opt.drift_limit >= 0.0)) throw pep::ValidationError("drift_limit", "must be >= 0");
    if (opt.max_replans < 1) throw pep::ValidationError("max_replans", "must be >= 1");
    const auto seeds = pep::seed_range(first_seed, n_seeds);
    const pep::ReplanReport report =
        pep::run_replans(scenario->scenario, alpha_p, seeds, opt.horizon, {opt.k_drift, opt.drift_limit}, models->set,
                         opt.max_replans);
    ensure_dir(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text(dir / "replan_summary.csv", pep::replan_summary_csv(report));
    write_text(dir / "drift_trace.csv", pep::drift_trace_csv(report));
    if (success_rate) *success_rate = report.success_rate();
  });
}

}  // extern "C"
