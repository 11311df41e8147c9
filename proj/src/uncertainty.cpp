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

#include "pep/uncertainty.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "csv_util.hpp"

namespace pep {

using nlohmann::json;

namespace {

constexpr std::array<double, 6> kReferenceSpeeds{0.1, 2.0, 4.0, 6.0, 8.0, 10.0};
constexpr double kResidualSquareFloor = 1e-20;
constexpr int kMonotoneGrid = 201;

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double gaussian_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

struct Grouped {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> weight;
};

Grouped group_by_speed(const std::vector<std::pair<double, double>>& xy) {
  std::map<double, std::pair<double, int>> acc;
  for (const auto& [x, y] : xy) {
    auto& a = acc[x];
    a.first += y;
    a.second += 1;
  }
  Grouped g;
  for (const auto& [x, a] : acc) {
    g.x.push_back(x);
    g.mean.push_back(a.first / a.second);
    g.weight.push_back(a.second);
  }
  return g;
}

// Kernel ridge regression on grouped data. Duplicated inputs collapse into a
// weighted ridge term, which gives the same minimiser as the ungrouped
// problem.
SmoothFunction kernel_ridge(const Grouped& g, double lengthscale, double ridge) {
  const auto n = static_cast<Eigen::Index>(g.x.size());
  double wsum = 0.0;
  double ysum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    wsum += g.weight[i];
    ysum += g.weight[i] * g.mean[i];
  }
  SmoothFunction f;
  f.kind = SmoothFunction::Kind::kRbf;
  f.lengthscale = lengthscale;
  f.offset = ysum / wsum;

  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd rhs(n);
  const double inv2l2 = 1.0 / (2.0 * lengthscale * lengthscale);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dx = g.x[i] - g.x[j];
      a(i, j) = std::exp(-dx * dx * inv2l2);
    }
    a(i, i) += ridge / g.weight[i];
    rhs(i) = g.mean[i] - f.offset;
  }
  const Eigen::VectorXd alpha = a.ldlt().solve(rhs);
  f.centers = g.x;
  f.coefs.assign(alpha.data(), alpha.data() + n);
  return f;
}

// Pool-adjacent-violators for an unweighted non-decreasing fit.
std::vector<double> isotonic(const std::vector<double>& y) {
  std::vector<double> level;
  std::vector<int> count;
  for (double v : y) {
    level.push_back(v);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double merged = (level[level.size() - 2] * count[count.size() - 2] + level.back() * count.back()) /
                            (count[count.size() - 2] + count.back());
      const int c = count[count.size() - 2] + count.back();
      level.pop_back();
      count.pop_back();
      level.back() = merged;
      count.back() = c;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (std::size_t b = 0; b < level.size(); ++b) out.insert(out.end(), count[b], level[b]);
  return out;
}

bool is_non_decreasing(const SmoothFunction& f, double lo, double hi, std::vector<double>* grid_values) {
  std::vector<double> vals(kMonotoneGrid);
  double scale = 0.0;
  for (int i = 0; i < kMonotoneGrid; ++i) {
    vals[i] = f.value(lo + (hi - lo) * i / (kMonotoneGrid - 1));
    scale = std::max(scale, std::abs(vals[i]));
  }
  bool ok = true;
  for (int i = 1; i < kMonotoneGrid && ok; ++i) ok = vals[i] >= vals[i - 1] - 1e-12 * (1.0 + scale);
  if (grid_values) *grid_values = std::move(vals);
  return ok;
}

// Least-squares fit of offset + sum w_j Phi((v - c_j)/l) with w_j >= 0 by
// cyclic coordinate descent. The result is non-decreasing by construction.
SmoothFunction fit_erf_steps(const std::vector<double>& xs, const std::vector<double>& ys, double lo, double hi) {
  const int n_basis = 41;
  const double spacing = (hi - lo) / (n_basis - 1);
  const double ell = spacing;
  const auto m = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd phi(m, n_basis + 1);
  for (Eigen::Index r = 0; r < m; ++r) {
    phi(r, 0) = 1.0;
    for (int j = 0; j < n_basis; ++j) phi(r, j + 1) = gaussian_cdf((xs[r] - (lo + j * spacing)) / ell);
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), m);
  const Eigen::MatrixXd gram = phi.transpose() * phi;
  const Eigen::VectorXd b = phi.transpose() * y;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n_basis + 1);
  w(0) = y.mean();
  Eigen::VectorXd grad = gram * w - b;
  for (int sweep = 0; sweep < 5000; ++sweep) {
    double max_step = 0.0;
    for (Eigen::Index j = 0; j <= n_basis; ++j) {
      double next = w(j) - grad(j) / gram(j, j);
      if (j > 0) next = std::max(0.0, next);
      const double step = next - w(j);
      if (step != 0.0) {
        grad += step * gram.col(j);
        w(j) = next;
        max_step = std::max(max_step, std::abs(step));
      }
    }
    if (max_step < 1e-15) break;
  }
  SmoothFunction f;
  f.kind = SmoothFunction::Kind::kErfSteps;
  f.offset = w(0);
  f.lengthscale = ell;
  for (int j = 0; j < n_basis; ++j) {
    f.centers.push_back(lo + j * spacing);
    f.coefs.push_back(w(j + 1));
  }
  return f;
}

// Projects onto non-decreasing functions: isotonic regression of the curve on
// a dense grid, re-smoothed with a monotone basis.
SmoothFunction enforce_monotone(const SmoothFunction& f, double lo, double hi, bool& reprojected) {
  std::vector<double> vals;
  reprojected = false;
  if (hi <= lo || is_non_decreasing(f, lo, hi, &vals)) return f;
  reprojected = true;
  std::vector<double> xs(kMonotoneGrid);
  for (int i = 0; i < kMonotoneGrid; ++i) xs[i] = lo + (hi - lo) * i / (kMonotoneGrid - 1);
  return fit_erf_steps(xs, isotonic(vals), lo, hi);
}

json smooth_to_json(const SmoothFunction& f) {
  return {{"kind", f.kind == SmoothFunction::Kind::kRbf ? "rbf" : "erf_steps"},
          {"offset", f.offset},
          {"lengthscale", f.lengthscale},
          {"centers", f.centers},
          {"coefs", f.coefs}};
}

SmoothFunction smooth_from_json(const json& j) {
  SmoothFunction f;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "rbf") {
    f.kind = SmoothFunction::Kind::kRbf;
  } else if (kind == "erf_steps") {
    f.kind = SmoothFunction::Kind::kErfSteps;
  } else {
    throw ParseError("unknown smooth function kind '" + kind + "'");
  }
  f.offset = j.at("offset").get<double>();
  f.lengthscale = j.at("lengthscale").get<double>();
  f.centers = j.at("centers").get<std::vector<double>>();
  f.coefs = j.at("coefs").get<std::vector<double>>();
  if (f.centers.size() != f.coefs.size()) throw ParseError("centers/coefs length mismatch");
  if (!(f.lengthscale > 0.0)) throw ParseError("lengthscale must be > 0");
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string ReferenceUncertaintyLaw::describe() {
  return "mu=0.004*v^2 sigma=0.01+0.006*v law_version=" + std::to_string(kVersion);
}

std::span<const double> reference_uncertainty_speeds() { return kReferenceSpeeds; }

std::vector<UncertaintySample> generate_reference_dataset(int n_per_speed, std::span<const double> speeds,
                                                          std::uint64_t seed) {
  if (speeds.empty()) throw ValidationError("speeds", "must be non-empty");
  if (n_per_speed < 2) throw ValidationError("n_per_speed", "must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<UncertaintySample> out;
  out.reserve(speeds.size() * static_cast<std::size_t>(n_per_speed));
  for (double v : speeds) {
    if (!(v >= 0.0)) throw ValidationError("speeds", "must be >= 0");
    const double mu = ReferenceUncertaintyLaw::mean(v);
    const double sd = ReferenceUncertaintyLaw::stddev(v);
    for (int i = 0; i < n_per_speed; ++i) out.push_back({v, mu + sd * normal(rng)});
  }
  return out;
}

double SmoothFunction::value(double v) const {
  double s = offset;
  if (kind == Kind::kRbf) {
    const double inv2l2 = 1.0 / (2.0 * lengthscale * lengthscale);
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double dx = v - centers[i];
      s += coefs[i] * std::exp(-dx * dx * inv2l2);
    }
  } else {
    for (std::size_t i = 0; i < centers.size(); ++i) {
      if (coefs[i] != 0.0) s += coefs[i] * gaussian_cdf((v - centers[i]) / lengthscale);
    }
  }
  return s;
}

double SmoothFunction::derivative(double v) const {
  double s = 0.0;
  if (kind == Kind::kRbf) {
    const double l2 = lengthscale * lengthscale;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double dx = v - centers[i];
      s -= coefs[i] * dx / l2 * std::exp(-dx * dx / (2.0 * l2));
    }
  } else {
    for (std::size_t i = 0; i < centers.size(); ++i) {
      if (coefs[i] != 0.0) s += coefs[i] * gaussian_pdf((v - centers[i]) / lengthscale) / lengthscale;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

MotionUncertaintyModel::MotionUncertaintyModel(SmoothFunction mean_fn, SmoothFunction log_var_fn, double v_lo,
                                               double v_hi, KernelSettings kernel, FitReport report)
    : mean_fn_(std::move(mean_fn)),
      log_var_fn_(std::move(log_var_fn)),
      v_lo_(v_lo),
      v_hi_(v_hi),
      kernel_(kernel),
      report_(report) {
  if (!(v_lo <= v_hi)) throw ValidationError("train_domain", "v_lo must not exceed v_hi");
}

MotionUncertaintyModel MotionUncertaintyModel::constant(double mu, double sigma, double v_lo, double v_hi) {
  if (!(sigma > 0.0)) throw ValidationError("sigma", "must be > 0");
  return MotionUncertaintyModel(SmoothFunction::constant(mu), SmoothFunction::constant(2.0 * std::log(sigma)), v_lo,
                                v_hi);
}

double MotionUncertaintyModel::clamp(double v) const { return std::clamp(v, v_lo_, v_hi_); }

double MotionUncertaintyModel::mean(double v) const { return mean_fn_.value(clamp(v)); }

double MotionUncertaintyModel::stddev(double v) const { return std::exp(0.5 * log_var_fn_.value(clamp(v))); }

double MotionUncertaintyModel::mean_derivative(double v) const {
  if (v < v_lo_ || v > v_hi_) return 0.0;
  return mean_fn_.derivative(v);
}

double MotionUncertaintyModel::stddev_derivative(double v) const {
  if (v < v_lo_ || v > v_hi_) return 0.0;
  return 0.5 * log_var_fn_.derivative(v) * stddev(v);
}

std::pair<double, double> MotionUncertaintyModel::stddev_and_derivative(double v) const {
  const double sigma = stddev(v);
  if (v < v_lo_ || v > v_hi_) return {sigma, 0.0};
  return {sigma, 0.5 * log_var_fn_.derivative(v) * sigma};
}

// ---------------------------------------------------------------------------

MotionUncertaintyModel fit_motion_model(std::span<const UncertaintySample> data, KernelSettings kernel) {
  if (data.size() < 10) throw FitError("need at least 10 samples, got " + std::to_string(data.size()));
  double lo = data.front().v;
  double hi = data.front().v;
  for (const auto& s : data) {
    if (!std::isfinite(s.v) || !std::isfinite(s.residual) || s.v < 0.0) {
      throw FitError("samples must have finite residual and v >= 0");
    }
    lo = std::min(lo, s.v);
    hi = std::max(hi, s.v);
  }
  if (lo == hi) throw FitError("insufficient speed diversity");

  std::vector<std::pair<double, double>> train;
  std::vector<UncertaintySample> heldout;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i % 5 == 4) {
      heldout.push_back(data[i]);
    } else {
      train.emplace_back(data[i].v, data[i].residual);
    }
  }
  const bool train_diverse = std::any_of(train.begin(), train.end(), [&](const auto& p) { return p.first != train.front().first; });
  if (!train_diverse) {
    train.clear();
    for (const auto& s : data) train.emplace_back(s.v, s.residual);
  }

  if (!(kernel.lengthscale > 0.0)) kernel.lengthscale = (hi - lo) / 4.0;
  if (!(kernel.ridge > 0.0)) throw FitError("ridge must be > 0");

  FitReport report;
  report.n_train = static_cast<int>(train.size());
  report.n_heldout = static_cast<int>(heldout.size());

  SmoothFunction mean_fn = kernel_ridge(group_by_speed(train), kernel.lengthscale, kernel.ridge);
  mean_fn = enforce_monotone(mean_fn, lo, hi, report.mean_reprojected);

  std::vector<std::pair<double, double>> log_sq;
  log_sq.reserve(train.size());
  for (const auto& [v, r] : train) {
    const double e = r - mean_fn.value(v);
    log_sq.emplace_back(v, std::log(std::max(e * e, kResidualSquareFloor)));
  }
  SmoothFunction log_var = kernel_ridge(group_by_speed(log_sq), kernel.lengthscale, kernel.ridge);
  log_var = enforce_monotone(log_var, lo, hi, report.std_reprojected);
  log_var.offset += MotionUncertaintyModel::kLogChiSquareBias;

  MotionUncertaintyModel model(std::move(mean_fn), std::move(log_var), lo, hi, kernel, report);
  report.heldout_coverage = heldout.empty() ? 0.0 : coverage(model, heldout);
  return MotionUncertaintyModel(model.mean_fn(), model.log_var_fn(), lo, hi, kernel, report);
}

double coverage(const MotionUncertaintyModel& model, std::span<const UncertaintySample> data) {
  if (data.empty()) return 0.0;
  std::size_t inside = 0;
  for (const auto& s : data) {
    if (std::abs(s.residual - model.mean(s.v)) <= model.stddev(s.v)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(data.size());
}

SensorNoise sensor_noise(const UncertaintyModels& models, double v, double d) {
  const double sm = models.motion.stddev(v);
  const double sd = models.distance.sigma(d);
  return {models.motion.mean(v), std::sqrt(sd * sd + sm * sm)};
}

NoiseDerivatives noise_derivatives(const UncertaintyModels& models, double v, double d) {
  const double sm = models.motion.stddev(v);
  const double sd = models.distance.sigma(d);
  const double sigma = std::sqrt(sd * sd + sm * sm);
  NoiseDerivatives out;
  out.dmu_dv = models.motion.mean_derivative(v);
  out.dsigma_dv = sm * models.motion.stddev_derivative(v) / sigma;
  out.dsigma_dd = sd * models.distance.sigma_derivative(d) / sigma;
  return out;
}

// ---------------------------------------------------------------------------

void write_uncertainty_csv(const std::string& path, std::span<const UncertaintySample> data,
                           const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "v,residual\n";
  for (const auto& s : data) out << detail::format_double(s.v) << ',' << detail::format_double(s.residual) << '\n';
}

std::vector<UncertaintySample> read_uncertainty_csv(const std::string& path) {
  std::vector<UncertaintySample> out;
  detail::read_csv(path, "v,residual", [&](const std::vector<std::string_view>& f, const std::string& where) {
    if (f.size() != 2) throw ParseError(where + ": expected 2 columns");
    out.push_back({detail::parse_double(f[0], where), detail::parse_double(f[1], where)});
  });
  return out;
}

std::string uncertainty_model_to_json(const UncertaintyModels& models) {
  const auto& m = models.motion;
  const auto& r = m.fit_report();
  json j = {
      {"format", "pep-uncertainty-model"},
      {"version", 1},
      {"kernel", {{"type", "rbf"}, {"lengthscale", m.kernel().lengthscale}, {"ridge", m.kernel().ridge}}},
      {"train_domain", {m.v_lo(), m.v_hi()}},
      {"mean", smooth_to_json(m.mean_fn())},
      {"log_variance", smooth_to_json(m.log_var_fn())},
      {"distance", {{"k_d", models.distance.k_d}, {"mu_d", 0.0}}},
      {"fit_report",
       {{"n_train", r.n_train},
        {"n_heldout", r.n_heldout},
        {"heldout_coverage", r.heldout_coverage},
        {"mean_reprojected", r.mean_reprojected},
        {"std_reprojected", r.std_reprojected}}},
  };
  return j.dump(2);
}

UncertaintyModels uncertainty_model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != "pep-uncertainty-model") {
      throw ParseError("not a pep uncertainty model file");
    }
    KernelSettings kernel{j.at("kernel").at("lengthscale").get<double>(), j.at("kernel").at("ridge").get<double>()};
    FitReport report;
    if (j.contains("fit_report")) {
      const json& r = j.at("fit_report");
      report.n_train = r.value("n_train", 0);
      report.n_heldout = r.value("n_heldout", 0);
      report.heldout_coverage = r.value("heldout_coverage", 0.0);
      report.mean_reprojected = r.value("mean_reprojected", false);
      report.std_reprojected = r.value("std_reprojected", false);
    }
    const auto domain = j.at("train_domain").get<std::vector<double>>();
    if (domain.size() != 2) throw ParseError("train_domain must have two entries");
    UncertaintyModels models;
    models.motion = MotionUncertaintyModel(smooth_from_json(j.at("mean")), smooth_from_json(j.at("log_variance")),
                                           domain[0], domain[1], kernel, report);
    models.distance.k_d = j.at("distance").at("k_d").get<double>();
    return models;
  } catch (const json::exception& e) {
    throw ParseError(std::string("uncertainty model: ") + e.what());
  }
}

void save_uncertainty_model(const UncertaintyModels& models, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << uncertainty_model_to_json(models) << '\n';
}

UncertaintyModels load_uncertainty_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return uncertainty_model_from_json(ss.str());
}

}  // namespace pep
