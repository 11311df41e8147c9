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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pep/core.hpp"

namespace pep {

enum class FlightMode { kConstant, kAccel, kDecel };

const char* flight_mode_name(FlightMode mode);
FlightMode flight_mode_from_name(const std::string& name);

struct PowerSample {
  double v = 0.0;
  FlightMode mode = FlightMode::kConstant;
  double power = 0.0;  // watts
};

/// Synthetic power law: U-shaped cruise power with accel/decel as fixed
/// multiples of it.
struct ReferencePowerLaw {
  static constexpr int kVersion = 1;
  static constexpr double kNoiseStd = 5.0;
  static double constant(double v) { return 220.0 - 14.0 * v + 2.2 * v * v; }
  static double accel(double v) { return 1.25 * constant(v); }
  static double decel(double v) { return 0.9 * constant(v); }
  static double power(FlightMode mode, double v);
  static std::string describe();
};

std::span<const double> reference_power_speeds();

std::vector<PowerSample> generate_reference_power_dataset(std::uint64_t seed, int n_per_speed = 20);

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes; never
/// overshoots the data. Evaluation clamps to the knot range.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> knots, std::vector<double> values);
  MonotoneCubic(std::vector<double> knots, std::vector<double> values, std::vector<double> slopes);

  double operator()(double x) const;
  double derivative(double x) const;

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }
  const std::vector<double>& slopes() const { return m_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

class EnergyModel {
 public:
  EnergyModel() = default;
  EnergyModel(MonotoneCubic p_const, MonotoneCubic p_acc, MonotoneCubic p_dec);

  double p_const(double v) const { return p_const_(v); }
  double p_acc(double v) const { return p_acc_(v); }
  double p_dec(double v) const { return p_dec_(v); }
  double power(FlightMode mode, double v) const;
  /// Joules per metre of constant-speed flight.
  double energy_per_distance(double v) const { return p_const_(v) / v; }

  double v_lo() const { return v_lo_; }
  double v_hi() const { return v_hi_; }
  const MonotoneCubic& curve(FlightMode mode) const;

 private:
  MonotoneCubic p_const_;
  MonotoneCubic p_acc_;
  MonotoneCubic p_dec_;
  double v_lo_ = 0.0;
  double v_hi_ = 0.0;
};

/// Interpolates per-speed mean power for each mode. Needs at least three
/// distinct speeds per mode.
EnergyModel fit_energy_model(std::span<const PowerSample> data);

class RampTooLongError : public Error {
 public:
  using Error::Error;
};

/// Distance covered while changing speed from v_cur to v_tmp at a_max.
double ramp_distance(double v_cur, double v_tmp, double a_max);
inline bool ramp_fits(double v_cur, double v_tmp, double d, double a_max) {
  return ramp_distance(v_cur, v_tmp, a_max) <= d;
}

struct SegmentEnergy {
  double c_e = 0.0;       // energy / p_max, i.e. seconds at full power
  double energy_j = 0.0;  // joules
  double duration = 0.0;
  double ramp_time = 0.0;
  double ramp_distance = 0.0;
};

/// Energy of a segment of length d flown as a constant-acceleration ramp
/// from v_cur to v_tmp followed by cruise at v_tmp. Throws RampTooLongError
/// if the ramp does not fit.
SegmentEnergy segment_energy_cost(const EnergyModel& model, double v_cur, double v_tmp, double d, double a_max,
                                  double p_max);

/// Joules spent in the first `t` seconds of such a segment.
double cumulative_segment_energy(const EnergyModel& model, double v_cur, double v_tmp, double a_max, double t);

// File formats -------------------------------------------------------------

void write_power_csv(const std::string& path, std::span<const PowerSample> data, const std::string& header_comment);
std::vector<PowerSample> read_power_csv(const std::string& path);

std::string energy_model_to_json(const EnergyModel& model);
EnergyModel energy_model_from_json(const std::string& text);
void save_energy_model(const EnergyModel& model, const std::string& path);
EnergyModel load_energy_model(const std::string& path);

}  // namespace pep
