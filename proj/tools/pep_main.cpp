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

// pep: command-line front end over the C interface.
//
//   pep gen-data --kind uncertainty|power --out FILE [--seed N]
//   pep fit      --kind uncertainty|power --data FILE --out FILE
//   pep plan     --scenario NAME|FILE [--models FILE]... [--alpha-p A] [--seed N] --out DIR
//   pep compare  --scenario NAME|FILE... [--alpha-p A...] [--n-seeds N] [--seed N] --out DIR
//   pep replan   --scenario NAME|FILE [--alpha-p A] [--n-seeds N] [--seed N] --out DIR
//
// Exit codes: 0 success, 1 invalid input, 2 planning failure.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pep/pep.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitPlanning = 2;

int exit_code(pep_status status) {
  switch (status) {
    case PEP_OK: return kExitOk;
    case PEP_ERR_PLANNING:
    case PEP_ERR_GOAL_UNREACHABLE: return kExitPlanning;
    default: return kExitInvalid;
  }
}

int report(pep_status status) {
  if (status != PEP_OK) std::fprintf(stderr, "pep: %s: %s\n", pep_status_name(status), pep_last_error());
  return exit_code(status);
}

struct ScenarioDeleter {
  void operator()(pep_scenario* s) const { pep_scenario_free(s); }
};
struct ModelsDeleter {
  void operator()(pep_models* m) const { pep_models_free(m); }
};
struct TrajectoryDeleter {
  void operator()(pep_trajectory* t) const { pep_trajectory_free(t); }
};
using ScenarioPtr = std::unique_ptr<pep_scenario, ScenarioDeleter>;
using ModelsPtr = std::unique_ptr<pep_models, ModelsDeleter>;
using TrajectoryPtr = std::unique_ptr<pep_trajectory, TrajectoryDeleter>;

pep_status parse_kind(const std::string& text, pep_data_kind* kind) {
  if (text == "uncertainty") {
    *kind = PEP_DATA_UNCERTAINTY;
  } else if (text == "power") {
    *kind = PEP_DATA_POWER;
  } else {
    std::fprintf(stderr, "pep: --kind must be 'uncertainty' or 'power'\n");
    return PEP_ERR_VALIDATION;
  }
  return PEP_OK;
}

pep_status open_models(const std::vector<std::string>& paths, ModelsPtr* out) {
  pep_models* m = nullptr;
  pep_status st;
  if (paths.empty()) {
    st = pep_models_reference(PEP_DEFAULT_UNCERTAINTY_SEED, PEP_DEFAULT_POWER_SEED, &m);
  } else {
    std::vector<const char*> raw;
    for (const auto& p : paths) raw.push_back(p.c_str());
    st = pep_models_load(raw.data(), raw.size(), &m);
  }
  out->reset(m);
  return st;
}

pep_status open_scenario(const std::string& name, ScenarioPtr* out) {
  pep_scenario* s = nullptr;
  const pep_status st = pep_scenario_open(name.c_str(), &s);
  out->reset(s);
  return st;
}

void log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perception-and-energy-aware UAV trajectory planning"};
  app.require_subcommand(1);

  std::string kind;
  std::string out;
  std::string data;
  std::uint64_t seed = 1;
  int n_per_speed = 0;
  std::vector<std::string> scenarios;
  std::vector<std::string> models;
  std::vector<std::string> alphas;
  int n_seeds = 20;
  int max_samples = 0;
  bool verbose = false;
  pep_replan_options replan_opt = pep_replan_defaults();

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic reference dataset (CSV)");
  gen->add_option("--kind", kind, "uncertainty or power")->required();
  gen->add_option("--out", out, "Output CSV path")->required();
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--n-per-speed", n_per_speed, "Samples per speed (default depends on kind)");

  auto* fit = app.add_subcommand("fit", "Fit a model to a dataset and write model JSON");
  fit->add_option("--kind", kind, "uncertainty or power")->required();
  fit->add_option("--data", data, "Input CSV path")->required();
  fit->add_option("--out", out, "Output JSON path")->required();

  auto* plan = app.add_subcommand("plan", "Plan one trajectory");
  plan->add_option("--scenario", scenarios, "Bundled scenario name or JSON path")->required()->expected(1);
  plan->add_option("--models", models, "Model JSON files (uncertainty and/or energy)");
  plan->add_option("--alpha-p", alphas, "Perception weight: direct, proposed, hpq or a number")->expected(1);
  plan->add_option("--seed", seed, "Planner seed");
  plan->add_option("--max-samples", max_samples, "Override the sample threshold");
  plan->add_option("--out", out, "Output directory")->required();
  plan->add_flag("--verbose", verbose, "Print progress every 1000 samples");

  auto* compare = app.add_subcommand("compare", "Run an alpha sweep over seeds and write a report");
  compare->add_option("--scenario", scenarios, "Bundled scenario names or JSON paths")->required();
  compare->add_option("--models", models, "Model JSON files (uncertainty and/or energy)");
  compare->add_option("--alpha-p", alphas, "Perception weights (default: direct proposed hpq)");
  compare->add_option("--n-seeds", n_seeds, "Seeds per alpha");
  compare->add_option("--seed", seed, "First seed");
  compare->add_option("--max-samples", max_samples, "Override the sample threshold");
  compare->add_option("--out", out, "Output directory")->required();

  auto* replan = app.add_subcommand("replan", "Receding-horizon runs with the drift proxy");
  replan->add_option("--scenario", scenarios, "Bundled scenario name or JSON path")->required()->expected(1);
  replan->add_option("--models", models, "Model JSON files (uncertainty and/or energy)");
  replan->add_option("--alpha-p", alphas, "Perception weight")->expected(1);
  replan->add_option("--n-seeds", n_seeds, "Number of seeds")->default_val(3);
  replan->add_option("--seed", seed, "First seed");
  replan->add_option("--horizon", replan_opt.horizon, "Metres flown per plan");
  replan->add_option("--k-drift", replan_opt.k_drift, "Drift proxy gain");
  replan->add_option("--drift-limit", replan_opt.drift_limit, "Failure threshold, metres");
  replan->add_option("--max-samples", max_samples, "Override the sample threshold");
  replan->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  if (*gen) {
    pep_data_kind k;
    if (parse_kind(kind, &k) != PEP_OK) return kExitInvalid;
    return report(pep_generate_data(k, out.c_str(), seed, n_per_speed));
  }

  if (*fit) {
    pep_data_kind k;
    if (parse_kind(kind, &k) != PEP_OK) return kExitInvalid;
    double coverage = 0.0;
    const pep_status st = pep_fit(k, data.c_str(), out.c_str(), &coverage);
    if (st == PEP_OK && k == PEP_DATA_UNCERTAINTY) std::printf("held-out 1-sigma coverage: %.4f\n", coverage);
    return report(st);
  }

  std::vector<double> alpha_values;
  for (const auto& a : alphas) {
    double v = 0.0;
    if (const pep_status st = pep_parse_alpha(a.c_str(), &v); st != PEP_OK) return report(st);
    alpha_values.push_back(v);
  }

  ModelsPtr model_set;
  if (const pep_status st = open_models(models, &model_set); st != PEP_OK) return report(st);

  std::vector<ScenarioPtr> opened;
  for (const auto& name : scenarios) {
    ScenarioPtr s;
    if (const pep_status st = open_scenario(name, &s); st != PEP_OK) return report(st);
    if (max_samples > 0) {
      if (const pep_status st = pep_scenario_set_max_samples(s.get(), max_samples); st != PEP_OK) return report(st);
    }
    opened.push_back(std::move(s));
  }

  if (*plan) {
    pep_scenario* s = opened.front().get();
    if (!alpha_values.empty()) {
      if (const pep_status st = pep_scenario_set_alpha_p(s, alpha_values.front()); st != PEP_OK) return report(st);
    }
    pep_scenario_set_seed(s, seed);
    if (verbose) pep_set_log_callback(log_line, nullptr);
    pep_trajectory* raw = nullptr;
    const pep_status st = pep_plan(s, model_set.get(), &raw);
    TrajectoryPtr traj(raw);
    if (st != PEP_OK) return report(st);
    if (const pep_status ws = pep_trajectory_write(traj.get(), out.c_str(), nullptr); ws != PEP_OK) return report(ws);
    pep_summary sum;
    pep_trajectory_summary(traj.get(), &sum);
    std::printf("energy %.1f J, perception %.1f, duration %.2f s, %d segments\n", sum.total_energy_j,
                sum.total_perception, sum.duration_s, sum.n_segments);
    return kExitOk;
  }

  if (*compare) {
    if (alpha_values.empty()) alpha_values = {0.0, 4.0, 1000.0};
    std::vector<const pep_scenario*> raw;
    for (const auto& s : opened) raw.push_back(s.get());
    const pep_status st = pep_compare(raw.data(), raw.size(), alpha_values.data(), alpha_values.size(), n_seeds,
                                      seed, model_set.get(), out.c_str());
    if (st == PEP_OK) std::printf("wrote %s/compare.md and %s/compare.csv\n", out.c_str(), out.c_str());
    return report(st);
  }

  if (*replan) {
    const double alpha = alpha_values.empty() ? 4.0 : alpha_values.front();
    double rate = 0.0;
    const pep_status st =
        pep_replan(opened.front().get(), model_set.get(), alpha, n_seeds, seed, &replan_opt, out.c_str(), &rate);
    if (st == PEP_OK) std::printf("success rate %.3f\n", rate);
    return report(st);
  }
  return kExitInvalid;
}
