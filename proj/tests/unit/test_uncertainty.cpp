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
#include <vector>

#include "pep/uncertainty.hpp"
#include "test_util.hpp"

using namespace pep;
using pep::testing::Gen;

namespace {

const MotionUncertaintyModel& reference_fit() {
  static const MotionUncertaintyModel m =
      fit_motion_model(generate_reference_dataset(500, reference_uncertainty_speeds(), 7));
  return m;
}

double central(auto f, double x, double h) { return (f(x + h) - f(x - h)) / (2.0 * h); }

}  // namespace

TEST_CASE("reference dataset shape and determinism") {
  const std::vector<double> one{1.0};
  const auto two = generate_reference_dataset(2, one, 9);
  REQUIRE(two.size() == 2);
  CHECK(two[0].v == 1.0);
  CHECK(two[1].v == 1.0);

  const auto a = generate_reference_dataset(50, reference_uncertainty_speeds(), 4);
  const auto b = generate_reference_dataset(50, reference_uncertainty_speeds(), 4);
  REQUIRE(a.size() == 50 * reference_uncertainty_speeds().size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].v == b[i].v);
    CHECK(a[i].residual == b[i].residual);
  }
  CHECK(reference_uncertainty_speeds().size() == 6);
}

TEST_CASE("reference residual mean at low speed is within the CLT bound") {
  const std::vector<double> slow{0.1};
  const int n = 20000;
  const auto data = generate_reference_dataset(n, slow, 21);
  double sum = 0.0;
  for (const auto& s : data) sum += s.residual;
  const double mean = sum / n;
  CHECK(std::abs(mean - ReferenceUncertaintyLaw::mean(0.1)) < 3.0 * ReferenceUncertaintyLaw::stddev(0.1) / std::sqrt(n));
}

TEST_CASE("fit on reference data") {
  const auto& m = reference_fit();
  CHECK(m.mean(4.0) == doctest::Approx(0.064).epsilon(0.2));
  CHECK(m.fit_report().heldout_coverage == doctest::Approx(0.68).epsilon(0.1 / 0.68));
  CHECK(m.fit_report().n_heldout > 0);
  CHECK(m.v_lo() == doctest::Approx(0.1));
  CHECK(m.v_hi() == doctest::Approx(10.0));

  // The reported coverage is reproducible from the held-out split.
  const auto data = generate_reference_dataset(500, reference_uncertainty_speeds(), 7);
  std::vector<UncertaintySample> held;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i % 5 == 4) held.push_back(data[i]);
  }
  CHECK(coverage(m, held) == doctest::Approx(m.fit_report().heldout_coverage).epsilon(1e-12));
}

TEST_CASE("fit on constant data") {
  std::vector<UncertaintySample> data;
  for (int i = 0; i < 40; ++i) data.push_back({i % 2 == 0 ? 1.0 : 5.0, 0.05});
  const auto m = fit_motion_model(data);
  Gen g(2);
  for (int i = 0; i < 50; ++i) {
    const double v = g.uniform(0.0, 6.0);
    CHECK(std::abs(m.mean(v) - 0.05) < 1e-6);
    CHECK(m.stddev(v) > 0.0);
    CHECK(m.stddev(v) < 1e-3);
  }
}

TEST_CASE("fit rejects degenerate data") {
  std::vector<UncertaintySample> data(30, {2.0, 0.01});
  for (std::size_t i = 0; i < data.size(); ++i) data[i].residual = 0.001 * i;
  try {
    fit_motion_model(data);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()).find("insufficient speed diversity") != std::string::npos);
  }
  std::vector<UncertaintySample> few(5, {1.0, 0.0});
  CHECK_THROWS_AS(fit_motion_model(few), FitError);
}

TEST_CASE("sensor noise composition") {
  const UncertaintyModels models{MotionUncertaintyModel::constant(0.2, 0.04), DistanceUncertaintyModel{0.001}};
  const SensorNoise n = sensor_noise(models, 3.0, 30.0);
  CHECK(n.sigma == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(n.mu == doctest::Approx(0.2));

  const auto& fitted = reference_fit();
  const UncertaintyModels fm{fitted, DistanceUncertaintyModel{}};
  const SensorNoise at0 = sensor_noise(fm, 0.0, 10.0);
  CHECK(at0.mu == fitted.mean(fitted.v_lo()));
  CHECK(at0.sigma == doctest::Approx(std::hypot(0.01, fitted.stddev(fitted.v_lo()))).epsilon(1e-12));

  // Composition of the stated laws at v = 6, d = 20.
  const double sd = 0.001 * 20.0;
  const double want = std::sqrt(sd * sd + fitted.stddev(6.0) * fitted.stddev(6.0));
  CHECK(sensor_noise(fm, 6.0, 20.0).sigma == doctest::Approx(want).epsilon(1e-14));
  CHECK(sensor_noise(fm, 6.0, 20.0).sigma == doctest::Approx(std::hypot(sd, ReferenceUncertaintyLaw::stddev(6.0))).epsilon(0.1));
}

TEST_CASE("noise derivatives of constant models") {
  const UncertaintyModels models{MotionUncertaintyModel::constant(0.1, 0.02), DistanceUncertaintyModel{0.003}};
  const NoiseDerivatives d = noise_derivatives(models, 4.0, 12.0);
  CHECK(d.dmu_dv == 0.0);
  CHECK(d.dsigma_dv == 0.0);
  const double sd = 0.003 * 12.0;
  CHECK(d.dsigma_dd == doctest::Approx(0.003 * sd / std::hypot(sd, 0.02)));

  const UncertaintyModels no_distance{MotionUncertaintyModel::constant(0.1, 0.02), DistanceUncertaintyModel{0.0}};
  CHECK(noise_derivatives(no_distance, 4.0, 12.0).dsigma_dd == 0.0);
}

TEST_CASE("noise derivatives match central differences") {
  const UncertaintyModels fm{reference_fit(), DistanceUncertaintyModel{}};
  Gen g(17);
  for (int i = 0; i < 100; ++i) {
    const double v = g.uniform(0.2, 9.9);
    const double d = g.uniform(1.0, 45.0);
    const NoiseDerivatives an = noise_derivatives(fm, v, d);
    const double h = 1e-4;
    const double mu_fd = central([&](double x) { return sensor_noise(fm, x, d).mu; }, v, h);
    const double sv_fd = central([&](double x) { return sensor_noise(fm, x, d).sigma; }, v, h);
    const double sd_fd = central([&](double x) { return sensor_noise(fm, v, x).sigma; }, d, h);
    CHECK(pep::testing::rel_close(an.dmu_dv, mu_fd, 1e-4, 1e-6));
    CHECK(pep::testing::rel_close(an.dsigma_dv, sv_fd, 1e-4, 1e-6));
    CHECK(pep::testing::rel_close(an.dsigma_dd, sd_fd, 1e-4, 1e-6));
  }
}

TEST_CASE("derivatives vanish outside the training domain") {
  const auto& m = reference_fit();
  CHECK(m.mean_derivative(m.v_hi() + 1.0) == 0.0);
  CHECK(m.stddev_derivative(m.v_lo() - 0.05) == 0.0);
  CHECK(m.clamp(-1.0) == m.v_lo());
  CHECK(m.clamp(50.0) == m.v_hi());
  const auto [s, ds] = m.stddev_and_derivative(3.3);
  CHECK(s == m.stddev(3.3));
  CHECK(ds == m.stddev_derivative(3.3));
}

TEST_CASE("sensor noise is monotone and adds in quadrature") {
  const UncertaintyModels fm{reference_fit(), DistanceUncertaintyModel{}};
  Gen g(23);
  for (int i = 0; i < 500; ++i) {
    const double v1 = g.uniform(0.0, 11.0);
    const double v2 = g.uniform(0.0, 11.0);
    const double d1 = g.uniform(0.0, 50.0);
    const double d2 = g.uniform(0.0, 50.0);
    const auto lo_v = std::min(v1, v2), hi_v = std::max(v1, v2);
    const auto lo_d = std::min(d1, d2), hi_d = std::max(d1, d2);
    CHECK(sensor_noise(fm, lo_v, d1).sigma <= sensor_noise(fm, hi_v, d1).sigma);
    CHECK(sensor_noise(fm, v1, lo_d).sigma <= sensor_noise(fm, v1, hi_d).sigma);

    const double s = sensor_noise(fm, v1, d1).sigma;
    const double sm = fm.motion.stddev(v1);
    const double sd = fm.distance.sigma(d1);
    CHECK(std::abs(s * s - sd * sd - sm * sm) <= 1e-12);
  }
}

TEST_CASE("dataset CSV round-trip and errors") {
  pep::testing::ScratchDir dir("unc");
  const auto data = generate_reference_dataset(20, reference_uncertainty_speeds(), 3);
  write_uncertainty_csv(dir.file("d.csv"), data, ReferenceUncertaintyLaw::describe());
  const auto back = read_uncertainty_csv(dir.file("d.csv"));
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].v == data[i].v);
    CHECK(back[i].residual == data[i].residual);
  }

  pep::testing::spit(dir.file("bad.csv"), "v,residual\n1.0,0.1\n2.0,oops\n");
  try {
    read_uncertainty_csv(dir.file("bad.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  pep::testing::spit(dir.file("hdr.csv"), "speed,r\n1,2\n");
  CHECK_THROWS_AS(read_uncertainty_csv(dir.file("hdr.csv")), ParseError);
}

TEST_CASE("model JSON round-trip evaluates identically") {
  pep::testing::ScratchDir dir("unc");
  const UncertaintyModels fm{reference_fit(), DistanceUncertaintyModel{0.002}};
  save_uncertainty_model(fm, dir.file("m.json"));
  const UncertaintyModels back = load_uncertainty_model(dir.file("m.json"));
  Gen g(8);
  for (int i = 0; i < 100; ++i) {
    const double v = g.uniform(-1.0, 12.0);
    const double d = g.uniform(0.0, 50.0);
    CHECK(std::abs(sensor_noise(back, v, d).mu - sensor_noise(fm, v, d).mu) <= 1e-12);
    CHECK(std::abs(sensor_noise(back, v, d).sigma - sensor_noise(fm, v, d).sigma) <= 1e-12);
  }
  CHECK(back.motion.fit_report().heldout_coverage == fm.motion.fit_report().heldout_coverage);
  CHECK_THROWS_AS(uncertainty_model_from_json("{\"format\": \"something-else\"}"), ParseError);
  CHECK_THROWS_AS(uncertainty_model_from_json("[1, 2"), ParseError);
}
