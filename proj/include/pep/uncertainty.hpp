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

// Velocity-dependent (heteroscedastic) LiDAR range noise.
//
// The range residual of a scan point is modelled as Gaussian with mean
// mu_M(V) and deviation sqrt(sigma_D(d)^2 + sigma_M(V)^2), where V is the
// horizontal speed of the vehicle and d the range. The motion part is learned
// from (V, residual) samples; the distance part is a fixed linear law.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pep/core.hpp"

namespace pep {

struct UncertaintySample {
  double v = 0.0;
  double residual = 0.0;
};

/// Ground-truth law used to synthesise residual datasets. Versioned so that
/// dataset headers remain interpretable if the law ever changes.
struct ReferenceUncertaintyLaw {
  static constexpr int kVersion = 1;
  static double mean(double v) { return 0.004 * v * v; }
  static double stddev(double v) { return 0.01 + 0.006 * v; }
  static std::string describe();
};

/// Speeds at which the residual experiment is run, m/s.
std::span<const double> reference_uncertainty_speeds();

std::vector<UncertaintySample> generate_reference_dataset(int n_per_speed,
                                                          std::span<const double> speeds,
                                                          std::uint64_t seed);

/// Smooth scalar function of speed, either a kernel expansion
///   offset + sum_i c_i exp(-(v - z_i)^2 / (2 l^2))
/// or a monotone sum of Gaussian CDF steps
///   offset + sum_i w_i Phi((v - z_i) / l),  w_i >= 0.
struct SmoothFunction {
  enum class Kind { kRbf, kErfSteps };

  Kind kind = Kind::kRbf;
  double offset = 0.0;
  double lengthscale = 1.0;
  std::vector<double> centers;
  std::vector<double> coefs;

  double value(double v) const;
  double derivative(double v) const;

  static SmoothFunction constant(double c) {
    SmoothFunction f;
    f.offset = c;
    return f;
  }
};

struct FitReport {
  int n_train = 0;
  int n_heldout = 0;
  double heldout_coverage = 0.0;  // fraction of held-out residuals inside mean +/- 1 sigma
  bool mean_reprojected = false;
  bool std_reprojected = false;
};

struct KernelSettings {
  double lengthscale = 0.0;  // 0 -> speed range / 4
  double ridge = 1e-3;
};

class MotionUncertaintyModel {
 public:
  /// -E[log chi^2_1]; converts a mean log squared residual into a log variance.
  static constexpr double kLogChiSquareBias = 1.2703628454614782;

  MotionUncertaintyModel() = default;
  MotionUncertaintyModel(SmoothFunction mean_fn, SmoothFunction log_var_fn, double v_lo, double v_hi,
                         KernelSettings kernel = {}, FitReport report = {});

  /// Model with constant mean and deviation over [v_lo, v_hi].
  static MotionUncertaintyModel constant(double mu, double sigma, double v_lo = 0.0, double v_hi = 10.0);

  double clamp(double v) const;
  double mean(double v) const;
  double stddev(double v) const;
  /// Derivatives are with respect to the unclamped speed; zero outside the
  /// training domain.
  double mean_derivative(double v) const;
  double stddev_derivative(double v) const;
  /// {stddev(v), stddev_derivative(v)} with one evaluation of the variance fit.
  std::pair<double, double> stddev_and_derivative(double v) const;

  double v_lo() const { return v_lo_; }
  double v_hi() const { return v_hi_; }
  const SmoothFunction& mean_fn() const { return mean_fn_; }
  const SmoothFunction& log_var_fn() const { return log_var_fn_; }
  const KernelSettings& kernel() const { return kernel_; }
  const FitReport& fit_report() const { return report_; }

 private:
  SmoothFunction mean_fn_;
  SmoothFunction log_var_fn_;  // log sigma_M^2, bias already applied
  double v_lo_ = 0.0;
  double v_hi_ = 1.0;
  KernelSettings kernel_;
  FitReport report_;
};

struct DistanceUncertaintyModel {
  double k_d = 0.001;  // sigma_D per metre of range

  double sigma(double d) const { return k_d * d; }
  double sigma_derivative(double /*d*/) const { return k_d; }
};

struct UncertaintyModels {
  MotionUncertaintyModel motion;
  DistanceUncertaintyModel distance;
};

struct SensorNoise {
  double mu = 0.0;
  double sigma = 0.0;
};

struct NoiseDerivatives {
  double dmu_dv = 0.0;
  double dsigma_dv = 0.0;
  double dsigma_dd = 0.0;
};

/// Fits the two-stage heteroscedastic regressor. Every fifth sample is held
/// out for the coverage report.
MotionUncertaintyModel fit_motion_model(std::span<const UncertaintySample> data, KernelSettings kernel = {});

SensorNoise sensor_noise(const UncertaintyModels& models, double v, double d);
NoiseDerivatives noise_derivatives(const UncertaintyModels& models, double v, double d);

/// Fraction of samples whose residual lies within mean +/- stddev.
double coverage(const MotionUncertaintyModel& model, std::span<const UncertaintySample> data);

// File formats -------------------------------------------------------------

void write_uncertainty_csv(const std::string& path, std::span<const UncertaintySample> data,
                           const std::string& header_comment);
std::vector<UncertaintySample> read_uncertainty_csv(const std::string& path);

std::string uncertainty_model_to_json(const UncertaintyModels& models);
UncertaintyModels uncertainty_model_from_json(const std::string& text);
void save_uncertainty_model(const UncertaintyModels& models, const std::string& path);
UncertaintyModels load_uncertainty_model(const std::string& path);

}  // namespace pep
