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

#include "pep/energy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "csv_util.hpp"

namespace pep {

using nlohmann::json;

namespace {

constexpr std::array<double, 6> kPowerSpeeds{1.0, 2.0, 4.0, 6.0, 8.0, 10.0};
constexpr double kRampQuadratureStep = 0.05;  // m/s

int sign(double x) { return (x > 0.0) - (x < 0.0); }

// Three-point end slope, limited as in the usual shape-preserving scheme.
double end_slope(double h0, double h1, double d0, double d1) {
  double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (sign(m) != sign(d0)) {
    m = 0.0;
  } else if (sign(d0) != sign(d1) && std::abs(m) > std::abs(3.0 * d0)) {
    m = 3.0 * d0;
  }
  return m;
}

// Integral of P over [v0, v1] by trapezoids no wider than the quadrature step.
double integrate_power(const EnergyModel& model, FlightMode mode, double v0, double v1) {
  const double span = v1 - v0;
  if (span == 0.0) return 0.0;
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(span) / kRampQuadratureStep)));
  const double h = span / n;
  double s = 0.5 * (model.power(mode, v0) + model.power(mode, v1));
  for (int i = 1; i < n; ++i) s += model.power(mode, v0 + i * h);
  return s * std::abs(h);
}

json curve_to_json(const MonotoneCubic& c) {
  return {{"knots", c.knots()}, {"values", c.values()}, {"slopes", c.slopes()}};
}

MonotoneCubic curve_from_json(const json& j) {
  return MonotoneCubic(j.at("knots").get<std::vector<double>>(), j.at("values").get<std::vector<double>>(),
                       j.at("slopes").get<std::vector<double>>());
}

}  // namespace

const char* flight_mode_name(FlightMode mode) {
  switch (mode) {
    case FlightMode::kConstant: return "constant";
    case FlightMode::kAccel: return "accel";
    case FlightMode::kDecel: return "decel";
  }
  return "constant";
}

FlightMode flight_mode_from_name(const std::string& name) {
  if (name == "constant") return FlightMode::kConstant;
  if (name == "accel") return FlightMode::kAccel;
  if (name == "decel") return FlightMode::kDecel;
  throw ParseError("unknown flight mode '" + name + "'");
}

double ReferencePowerLaw::power(FlightMode mode, double v) {
  switch (mode) {
    case FlightMode::kConstant: return constant(v);
    case FlightMode::kAccel: return accel(v);
    case FlightMode::kDecel: return decel(v);
  }
  return constant(v);
}

std::string ReferencePowerLaw::describe() {
  return "p_const=220-14*v+2.2*v^2 p_acc=1.25*p_const p_dec=0.9*p_const noise_std=5 law_version=" +
         std::to_string(kVersion);
}

std::span<const double> reference_power_speeds() { return kPowerSpeeds; }

std::vector<PowerSample> generate_reference_power_dataset(std::uint64_t seed, int n_per_speed) {
  if (n_per_speed < 1) throw ValidationError("n_per_speed", "must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, ReferencePowerLaw::kNoiseStd);
  std::vector<PowerSample> out;
  for (FlightMode mode : {FlightMode::kConstant, FlightMode::kAccel, FlightMode::kDecel}) {
    for (double v : kPowerSpeeds) {
      const double p = ReferencePowerLaw::power(mode, v);
      for (int i = 0; i < n_per_speed; ++i) out.push_back({v, mode, p + normal(rng)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

MonotoneCubic::MonotoneCubic(std::vector<double> knots, std::vector<double> values)
    : x_(std::move(knots)), y_(std::move(values)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw ValidationError("knots", "need >= 2 knots with matching values");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw ValidationError("knots", "must be strictly increasing");
  }
  std::vector<double> h(n - 1);
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  m_.assign(n, 0.0);
  if (n == 2) {
    m_[0] = m_[1] = delta[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (sign(delta[i - 1]) * sign(delta[i]) <= 0) {
      m_[i] = 0.0;
    } else {
      // Weighted harmonic mean.
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      m_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  m_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  m_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

MonotoneCubic::MonotoneCubic(std::vector<double> knots, std::vector<double> values, std::vector<double> slopes)
    : x_(std::move(knots)), y_(std::move(values)), m_(std::move(slopes)) {
  if (x_.size() < 2 || y_.size() != x_.size() || m_.size() != x_.size()) {
    throw ParseError("monotone cubic: knots/values/slopes size mismatch");
  }
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw ParseError("monotone cubic: knots must be strictly increasing");
  }
}

double MonotoneCubic::operator()(double x) const {
  x = std::clamp(x, x_.front(), x_.back());
  const auto it = std::upper_bound(x_.begin(), x_.end() - 1, x);
  const std::size_t i = std::max<std::size_t>(1, static_cast<std::size_t>(it - x_.begin())) - 1;
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
         (t3 - t2) * h * m_[i + 1];
}

double MonotoneCubic::derivative(double x) const {
  if (x < x_.front() || x > x_.back()) return 0.0;
  const auto it = std::upper_bound(x_.begin(), x_.end() - 1, x);
  const std::size_t i = std::max<std::size_t>(1, static_cast<std::size_t>(it - x_.begin())) - 1;
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[i] + (3 * t2 - 4 * t + 1) * h * m_[i] + (-6 * t2 + 6 * t) * y_[i + 1] +
          (3 * t2 - 2 * t) * h * m_[i + 1]) /
         h;
}

// ---------------------------------------------------------------------------

EnergyModel::EnergyModel(MonotoneCubic p_const, MonotoneCubic p_acc, MonotoneCubic p_dec)
    : p_const_(std::move(p_const)), p_acc_(std::move(p_acc)), p_dec_(std::move(p_dec)) {
  v_lo_ = std::max({p_const_.knots().front(), p_acc_.knots().front(), p_dec_.knots().front()});
  v_hi_ = std::min({p_const_.knots().back(), p_acc_.knots().back(), p_dec_.knots().back()});
  for (const auto* c : {&p_const_, &p_acc_, &p_dec_}) {
    for (double y : c->values()) {
      if (!(y > 0.0)) throw ValidationError("power", "interpolated power must be > 0");
    }
  }
}

double EnergyModel::power(FlightMode mode, double v) const { return curve(mode)(v); }

const MonotoneCubic& EnergyModel::curve(FlightMode mode) const {
  switch (mode) {
    case FlightMode::kConstant: return p_const_;
    case FlightMode::kAccel: return p_acc_;
    case FlightMode::kDecel: return p_dec_;
  }
  return p_const_;
}

EnergyModel fit_energy_model(std::span<const PowerSample> data) {
  std::array<std::map<double, std::pair<double, int>>, 3> acc;
  for (const auto& s : data) {
    if (!(s.power > 0.0)) throw FitError("power samples must be > 0");
    if (!(s.v > 0.0)) throw FitError("power sample speeds must be > 0");
    auto& a = acc[static_cast<int>(s.mode)][s.v];
    a.first += s.power;
    a.second += 1;
  }
  std::array<MonotoneCubic, 3> curves;
  for (FlightMode mode : {FlightMode::kConstant, FlightMode::kAccel, FlightMode::kDecel}) {
    const auto& m = acc[static_cast<int>(mode)];
    if (m.size() < 3) {
      throw FitError(std::string(flight_mode_name(mode)) + ": need at least 3 distinct speeds, got " +
                     std::to_string(m.size()));
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [v, a] : m) {
      xs.push_back(v);
      ys.push_back(a.first / a.second);
    }
    curves[static_cast<int>(mode)] = MonotoneCubic(std::move(xs), std::move(ys));
  }
  return EnergyModel(std::move(curves[0]), std::move(curves[1]), std::move(curves[2]));
}

double ramp_distance(double v_cur, double v_tmp, double a_max) {
  return 0.5 * std::abs(v_tmp * v_tmp - v_cur * v_cur) / a_max;
}

SegmentEnergy segment_energy_cost(const EnergyModel& model, double v_cur, double v_tmp, double d, double a_max,
                                  double p_max) {
  if (!(d > 0.0)) throw ValidationError("d", "segment length must be > 0");
  if (!(v_tmp > 0.0) || !(v_cur >= 0.0)) throw ValidationError("v_tmp", "speeds must be positive");
  SegmentEnergy out;
  out.ramp_distance = ramp_distance(v_cur, v_tmp, a_max);
  if (out.ramp_distance > d) throw RampTooLongError("ramp does not fit in segment");
  out.ramp_time = std::abs(v_tmp - v_cur) / a_max;
  const FlightMode mode = v_tmp > v_cur ? FlightMode::kAccel : FlightMode::kDecel;
  const double ramp_j = integrate_power(model, mode, v_cur, v_tmp) / a_max;
  const double cruise = d - out.ramp_distance;
  out.energy_j = ramp_j + model.p_const(v_tmp) / v_tmp * cruise;
  out.c_e = out.energy_j / p_max;
  out.duration = out.ramp_time + cruise / v_tmp;
  return out;
}

double cumulative_segment_energy(const EnergyModel& model, double v_cur, double v_tmp, double a_max, double t) {
  const double ramp_time = std::abs(v_tmp - v_cur) / a_max;
  const FlightMode mode = v_tmp > v_cur ? FlightMode::kAccel : FlightMode::kDecel;
  if (t <= ramp_time) {
    const double v_t = v_cur + (v_tmp > v_cur ? 1.0 : -1.0) * a_max * t;
    return integrate_power(model, mode, v_cur, v_t) / a_max;
  }
  return integrate_power(model, mode, v_cur, v_tmp) / a_max + model.p_const(v_tmp) * (t - ramp_time);
}

// ---------------------------------------------------------------------------

void write_power_csv(const std::string& path, std::span<const PowerSample> data, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "v,mode,power_w\n";
  for (const auto& s : data) {
    out << detail::format_double(s.v) << ',' << flight_mode_name(s.mode) << ',' << detail::format_double(s.power)
        << '\n';
  }
}

std::vector<PowerSample> read_power_csv(const std::string& path) {
  std::vector<PowerSample> out;
  detail::read_csv(path, "v,mode,power_w", [&](const std::vector<std::string_view>& f, const std::string& where) {
    if (f.size() != 3) throw ParseError(where + ": expected 3 columns");
    PowerSample s;
    s.v = detail::parse_double(f[0], where);
    try {
      s.mode = flight_mode_from_name(std::string(detail::trim(f[1])));
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    s.power = detail::parse_double(f[2], where);
    out.push_back(s);
  });
  return out;
}

std::string energy_model_to_json(const EnergyModel& model) {
  json j = {{"format", "pep-energy-model"},
            {"version", 1},
            {"interpolation", "monotone_cubic_hermite"},
            {"train_domain", {model.v_lo(), model.v_hi()}},
            {"constant", curve_to_json(model.curve(FlightMode::kConstant))},
            {"accel", curve_to_json(model.curve(FlightMode::kAccel))},
            {"decel", curve_to_json(model.curve(FlightMode::kDecel))}};
  return j.dump(2);
}

EnergyModel energy_model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != "pep-energy-model") throw ParseError("not a pep energy model file");
    return EnergyModel(curve_from_json(j.at("constant")), curve_from_json(j.at("accel")),
                       curve_from_json(j.at("decel")));
  } catch (const json::exception& e) {
    throw ParseError(std::string("energy model: ") + e.what());
  }
}

void save_energy_model(const EnergyModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << energy_model_to_json(model) << '\n';
}

EnergyModel load_energy_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return energy_model_from_json(ss.str());
}

}  // namespace pep
