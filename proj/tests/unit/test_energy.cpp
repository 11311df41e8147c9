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
#include <string>
#include <vector>

#include "pep/energy.hpp"
#include "test_util.hpp"

using namespace pep;
using pep::testing::Gen;

namespace {

std::vector<PowerSample> exact_samples() {
  std::vector<PowerSample> out;
  for (FlightMode mode : {FlightMode::kConstant, FlightMode::kAccel, FlightMode::kDecel}) {
    for (double v : reference_power_speeds()) out.push_back({v, mode, ReferencePowerLaw::power(mode, v)});
  }
  return out;
}

const EnergyModel& noisy_model() {
  static const EnergyModel m = fit_energy_model(generate_reference_power_dataset(8));
  return m;
}

// Time-stepped integration of the ramp-then-cruise profile.
double stepped_energy(const EnergyModel& m, double v_cur, double v_tmp, double d, double a_max, double dt) {
  const double dir = v_tmp > v_cur ? 1.0 : -1.0;
  const FlightMode ramp_mode = dir > 0 ? FlightMode::kAccel : FlightMode::kDecel;
  const double t_ramp = std::abs(v_tmp - v_cur) / a_max;
  auto speed = [&](double t) { return t < t_ramp ? v_cur + dir * a_max * t : v_tmp; };
  auto power = [&](double t) { return t < t_ramp ? m.power(ramp_mode, speed(t)) : m.p_const(v_tmp); };
  double t = 0.0, s = 0.0, e = 0.0;
  while (true) {
    const double t_next = t + dt;
    const double ds = 0.5 * (speed(t) + speed(t_next)) * dt;
    if (s + ds >= d) {
      const double frac = (d - s) / ds;
      e += frac * dt * power(t + 0.5 * frac * dt);
      return e;
    }
    e += dt * power(t + 0.5 * dt);
    s += ds;
    t = t_next;
  }
}

}  // namespace

TEST_CASE("reference power law values") {
  CHECK(ReferencePowerLaw::constant(1.0) == doctest::Approx(208.2));
  CHECK(ReferencePowerLaw::constant(1.0) / 1.0 == doctest::Approx(208.2));
  CHECK(ReferencePowerLaw::constant(8.0) / 8.0 == doctest::Approx(31.1));
  CHECK(ReferencePowerLaw::constant(8.0) / 8.0 < ReferencePowerLaw::constant(1.0) / 1.0);
}

TEST_CASE("power dataset population mean and determinism") {
  const int n = 400;
  const auto data = generate_reference_power_dataset(5, n);
  double sum = 0.0;
  int count = 0;
  for (const auto& s : data) {
    if (s.mode == FlightMode::kConstant && s.v == 1.0) {
      sum += s.power;
      ++count;
    }
  }
  REQUIRE(count == n);
  CHECK(std::abs(sum / n - 208.2) < 3.0 * 5.0 / std::sqrt(n));

  const auto a = generate_reference_power_dataset(12);
  const auto b = generate_reference_power_dataset(12);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].power == b[i].power);
}

TEST_CASE("fit reproduces exact knots") {
  const EnergyModel m = fit_energy_model(exact_samples());
  CHECK(std::abs(m.p_const(4.0) - 199.2) < 1e-6);
  for (double v : reference_power_speeds()) {
    CHECK(std::abs(m.p_acc(v) - ReferencePowerLaw::accel(v)) < 1e-9);
    CHECK(std::abs(m.p_dec(v) - ReferencePowerLaw::decel(v)) < 1e-9);
  }
  CHECK(m.energy_per_distance(1.0) == doctest::Approx(208.2));
  CHECK(m.v_lo() == 1.0);
  CHECK(m.v_hi() == 10.0);
}

TEST_CASE("fit on noisy data stays close to the law between knots") {
  const auto& m = noisy_model();
  const auto speeds = reference_power_speeds();
  for (std::size_t i = 0; i + 1 < speeds.size(); ++i) {
    const double mid = 0.5 * (speeds[i] + speeds[i + 1]);
    for (FlightMode mode : {FlightMode::kConstant, FlightMode::kAccel, FlightMode::kDecel}) {
      const double law = ReferencePowerLaw::power(mode, mid);
      CHECK(std::abs(m.power(mode, mid) - law) < 0.05 * law);
    }
  }
}

TEST_CASE("fit names the mode with missing data") {
  std::vector<PowerSample> data;
  for (const auto& s : exact_samples()) {
    if (s.mode != FlightMode::kAccel) data.push_back(s);
  }
  try {
    fit_energy_model(data);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()).find(flight_mode_name(FlightMode::kAccel)) != std::string::npos);
  }
}

TEST_CASE("monotone cubic does not overshoot") {
  const MonotoneCubic c({0.0, 1.0, 2.0, 3.0, 4.0}, {0.0, 0.0, 1.0, 1.0, 1.0});
  for (double x = 0.0; x <= 4.0; x += 0.01) {
    CHECK(c(x) >= -1e-12);
    CHECK(c(x) <= 1.0 + 1e-12);
  }
  CHECK(c(-5.0) == 0.0);
  CHECK(c(9.0) == 1.0);
  CHECK_THROWS_AS(MonotoneCubic({0.0, 0.0, 1.0}, {1.0, 2.0, 3.0}), ValidationError);
}

TEST_CASE("segment energy without a ramp") {
  const EnergyModel m = fit_energy_model(exact_samples());
  const SegmentEnergy e = segment_energy_cost(m, 1.0, 1.0, 60.0, 1.0, 600.0);
  CHECK(e.c_e == doctest::Approx(20.82).epsilon(1e-12));
  CHECK(e.ramp_time == 0.0);
  CHECK(e.duration == doctest::Approx(60.0));

  Gen g(31);
  for (int i = 0; i < 50; ++i) {
    const double v = g.uniform(1.0, 10.0);
    const double d = g.uniform(1.0, 200.0);
    const double p_max = g.uniform(100.0, 1000.0);
    CHECK(segment_energy_cost(noisy_model(), v, v, d, 1.0, p_max).c_e ==
          doctest::Approx(noisy_model().p_const(v) * d / (v * p_max)).epsilon(1e-14));
  }
}

TEST_CASE("segment energy matches a 1 ms time-stepped integration") {
  const auto& m = noisy_model();
  const SegmentEnergy e = segment_energy_cost(m, 2.0, 6.0, 100.0, 1.0, 600.0);
  const double oracle = stepped_energy(m, 2.0, 6.0, 100.0, 1.0, 1e-3);
  CHECK(std::abs(e.energy_j - oracle) < 0.005 * oracle);

  const SegmentEnergy dec = segment_energy_cost(m, 9.0, 3.0, 60.0, 1.5, 600.0);
  CHECK(std::abs(dec.energy_j - stepped_energy(m, 9.0, 3.0, 60.0, 1.5, 1e-3)) < 0.005 * dec.energy_j);
}

TEST_CASE("ramp that does not fit is rejected") {
  CHECK(ramp_distance(1.0, 5.0, 1.0) == doctest::Approx(12.0));
  CHECK_FALSE(ramp_fits(1.0, 5.0, 11.9, 1.0));
  CHECK_THROWS_AS(segment_energy_cost(noisy_model(), 1.0, 5.0, 11.9, 1.0, 600.0), RampTooLongError);
  CHECK_NOTHROW(segment_energy_cost(noisy_model(), 1.0, 5.0, 12.0, 1.0, 600.0));
}

TEST_CASE("segment energy grows with distance and scales with p_max") {
  const auto& m = noisy_model();
  Gen g(41);
  for (int i = 0; i < 200; ++i) {
    const double v0 = g.uniform(1.0, 10.0);
    const double v1 = g.uniform(1.0, 10.0);
    const double a = g.uniform(0.5, 3.0);
    const double d0 = ramp_distance(v0, v1, a) + g.uniform(0.01, 50.0);
    const double d1 = d0 + g.uniform(1e-3, 50.0);
    const double p = g.uniform(100.0, 1000.0);
    const auto e0 = segment_energy_cost(m, v0, v1, d0, a, p);
    CHECK(e0.c_e < segment_energy_cost(m, v0, v1, d1, a, p).c_e);
    CHECK(segment_energy_cost(m, v0, v1, d0, a, 2.0 * p).c_e == e0.c_e / 2.0);
  }
}

TEST_CASE("cruise energy argmin over the speed grid") {
  const auto& m = noisy_model();
  double best_v = 0.0, best = 1e300;
  for (int k = 1; k <= 10; ++k) {
    const double c = segment_energy_cost(m, k, k, 500.0, 1.0, 600.0).c_e;
    if (c < best) {
      best = c;
      best_v = k;
    }
  }
  // 220/v - 14 + 2.2 v is minimal at v = sqrt(100).
  CHECK(std::abs(best_v - 10.0) <= 1.0);
}

TEST_CASE("ramp quadrature has converged") {
  const auto& m = noisy_model();
  Gen g(43);
  for (int i = 0; i < 50; ++i) {
    const double v0 = g.uniform(1.0, 10.0);
    const double v1 = g.uniform(1.0, 10.0);
    if (std::abs(v1 - v0) < 1e-3) continue;
    const FlightMode mode = v1 > v0 ? FlightMode::kAccel : FlightMode::kDecel;
    const int n = static_cast<int>(std::ceil(std::abs(v1 - v0) / 0.025));
    const double h = (v1 - v0) / n;
    double s = 0.5 * (m.power(mode, v0) + m.power(mode, v1));
    for (int k = 1; k < n; ++k) s += m.power(mode, v0 + k * h);
    const double fine_ramp = s * std::abs(h);
    const double d = ramp_distance(v0, v1, 1.0) + 10.0;
    const double fine = fine_ramp + m.p_const(v1) / v1 * 10.0;
    const double coarse = segment_energy_cost(m, v0, v1, d, 1.0, 600.0).energy_j;
    CHECK(std::abs(coarse - fine) < 1e-3 * fine);
  }
}

TEST_CASE("cumulative energy reaches the segment total") {
  const auto& m = noisy_model();
  const SegmentEnergy e = segment_energy_cost(m, 3.0, 7.0, 80.0, 1.0, 600.0);
  CHECK(cumulative_segment_energy(m, 3.0, 7.0, 1.0, e.duration) == doctest::Approx(e.energy_j).epsilon(1e-12));
  CHECK(cumulative_segment_energy(m, 3.0, 7.0, 1.0, 0.0) == 0.0);
  double prev = 0.0;
  for (double t = 0.1; t < e.duration; t += 0.1) {
    const double c = cumulative_segment_energy(m, 3.0, 7.0, 1.0, t);
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("power CSV and model JSON round-trips") {
  pep::testing::ScratchDir dir("energy");
  const auto data = generate_reference_power_dataset(3, 4);
  write_power_csv(dir.file("p.csv"), data, ReferencePowerLaw::describe());
  const auto back = read_power_csv(dir.file("p.csv"));
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].v == data[i].v);
    CHECK(back[i].mode == data[i].mode);
    CHECK(back[i].power == data[i].power);
  }

  save_energy_model(noisy_model(), dir.file("e.json"));
  const EnergyModel m = load_energy_model(dir.file("e.json"));
  for (double v = 0.5; v < 11.0; v += 0.37) {
    for (FlightMode mode : {FlightMode::kConstant, FlightMode::kAccel, FlightMode::kDecel}) {
      CHECK(std::abs(m.power(mode, v) - noisy_model().power(mode, v)) <= 1e-12);
    }
  }

  pep::testing::spit(dir.file("bad.csv"), "v,mode,power_w\n1,constant,200\n2,hover,190\n");
  try {
    read_power_csv(dir.file("bad.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}
