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

#include "pep/spline.hpp"

#include <algorithm>
#include <cmath>

#include "pep/energy.hpp"

namespace pep {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                         0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                           0.2369268850561891, 0.2369268850561891};

// Second derivatives of a natural cubic spline through (u_i, y_i).
std::vector<double> natural_second_derivatives(const std::vector<double>& u, const std::vector<double>& y) {
  const std::size_t n = u.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  // Thomas algorithm on the interior unknowns m[1..n-2].
  const std::size_t k = n - 2;
  std::vector<double> sub(k), diag(k), sup(k), rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = u[i] - u[i - 1];
    const double h1 = u[i + 1] - u[i];
    sub[i - 1] = h0;
    diag[i - 1] = 2.0 * (h0 + h1);
    sup[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i >= 1; --i) m[i] = (rhs[i - 1] - sup[i - 1] * m[i + 1]) / diag[i - 1];
  return m;
}

std::array<double, 4> span_coefficients(double y0, double y1, double m0, double m1, double h) {
  return {y0, (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0, 0.5 * m0, (m1 - m0) / (6.0 * h)};
}

double poly(const std::array<double, 4>& c, double t) { return c[0] + t * (c[1] + t * (c[2] + t * c[3])); }
double dpoly(const std::array<double, 4>& c, double t) { return c[1] + t * (2.0 * c[2] + t * 3.0 * c[3]); }

}  // namespace

SmoothPath smooth(std::span<const Point2> pts) {
  if (pts.size() < 2) throw ValidationError("control_points", "need at least two control points");
  SmoothPath path;
  path.controls_.assign(pts.begin(), pts.end());
  path.knots_.resize(pts.size());
  path.knots_[0] = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double chord = distance(pts[i - 1], pts[i]);
    if (!(chord > 0.0)) throw ValidationError("control_points", "consecutive control points coincide");
    path.knots_[i] = path.knots_[i - 1] + chord;
  }
  std::vector<double> xs(pts.size()), ys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    xs[i] = pts[i].x;
    ys[i] = pts[i].y;
  }
  const auto mx = natural_second_derivatives(path.knots_, xs);
  const auto my = natural_second_derivatives(path.knots_, ys);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double h = path.knots_[i + 1] - path.knots_[i];
    path.spans_.push_back(
        {span_coefficients(xs[i], xs[i + 1], mx[i], mx[i + 1], h), span_coefficients(ys[i], ys[i + 1], my[i], my[i + 1], h)});
  }
  path.build_length_table();
  return path;
}

std::size_t SmoothPath::span_index(double u) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end() - 1, u);
  return std::max<std::ptrdiff_t>(1, it - knots_.begin()) - 1;
}

Point2 SmoothPath::point(double u) const {
  const std::size_t i = span_index(u);
  const double t = u - knots_[i];
  return {poly(spans_[i].cx, t), poly(spans_[i].cy, t)};
}

Point2 SmoothPath::tangent(double u) const {
  const std::size_t i = span_index(u);
  const double t = u - knots_[i];
  return {dpoly(spans_[i].cx, t), dpoly(spans_[i].cy, t)};
}

double SmoothPath::speed(double u) const {
  const Point2 d = tangent(u);
  return std::hypot(d.x, d.y);
}

double SmoothPath::panel_length(double a, double b) const {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t k = 0; k < kGlNodes.size(); ++k) s += kGlWeights[k] * speed(mid + half * kGlNodes[k]);
  return s * half;
}

void SmoothPath::build_length_table() {
  panel_params_.clear();
  length_table_.clear();
  panel_params_.push_back(knots_.front());
  length_table_.push_back(0.0);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    const double h = (knots_[i + 1] - knots_[i]) / kPanelsPerSpan;
    for (int p = 0; p < kPanelsPerSpan; ++p) {
      const double a = knots_[i] + p * h;
      const double b = p + 1 == kPanelsPerSpan ? knots_[i + 1] : a + h;
      panel_params_.push_back(b);
      length_table_.push_back(length_table_.back() + panel_length(a, b));
    }
  }
}

double SmoothPath::param_at_length(double s) const {
  if (s <= 0.0) return knots_.front();
  if (s >= total_length()) return knots_.back();
  const auto it = std::upper_bound(length_table_.begin(), length_table_.end(), s);
  const std::size_t p = static_cast<std::size_t>(it - length_table_.begin()) - 1;
  double lo = panel_params_[p];
  double hi = panel_params_[p + 1];
  const double base = length_table_[p];
  const double target = s - base;
  // Newton on the panel-local length, kept inside a shrinking bracket.
  double u = lo + (hi - lo) * target / (length_table_[p + 1] - base);
  for (int iter = 0; iter < 50; ++iter) {
    const double f = panel_length(panel_params_[p], u) - target;
    if (std::abs(f) < 1e-12 * (1.0 + total_length())) break;
    if (f > 0.0) {
      hi = u;
    } else {
      lo = u;
    }
    const double sp = speed(u);
    double next = sp > 0.0 ? u - f / sp : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    u = next;
  }
  return u;
}

SmoothPath SmoothPath::tail(std::size_t first_span) const {
  if (first_span >= num_spans()) throw ValidationError("first_span", "out of range");
  SmoothPath out;
  out.controls_.assign(controls_.begin() + static_cast<std::ptrdiff_t>(first_span), controls_.end());
  out.knots_.assign(knots_.begin() + static_cast<std::ptrdiff_t>(first_span), knots_.end());
  out.spans_.assign(spans_.begin() + static_cast<std::ptrdiff_t>(first_span), spans_.end());
  out.build_length_table();
  return out;
}

// ---------------------------------------------------------------------------

double VelocityProfile::ramp_time() const { return std::abs(v_tmp - v_cur) / a_max; }

double VelocityProfile::ramp_distance() const { return pep::ramp_distance(v_cur, v_tmp, a_max); }

double VelocityProfile::duration(double length) const { return ramp_time() + (length - ramp_distance()) / v_tmp; }

double VelocityProfile::distance_at(double t) const {
  const double tr = ramp_time();
  const double a = v_tmp >= v_cur ? a_max : -a_max;
  if (t <= tr) return v_cur * t + 0.5 * a * t * t;
  return ramp_distance() + v_tmp * (t - tr);
}

double VelocityProfile::speed_at(double t) const {
  const double tr = ramp_time();
  if (t >= tr) return v_tmp;
  return v_cur + (v_tmp >= v_cur ? a_max : -a_max) * t;
}

std::vector<UavState> sample_states(const SmoothPath& path, const VelocityProfile& profile, double dt, double t0) {
  if (!(dt > 0.0)) throw ValidationError("dt", "must be > 0");
  if (!(profile.v_tmp > 0.0) || !(profile.a_max > 0.0)) throw ValidationError("v_tmp", "must be > 0");
  const double length = path.total_length();
  if (profile.ramp_distance() > length) throw RampTooLongError("ramp does not fit in path");
  const double total = profile.duration(length);
  const double tol = 1e-9 * std::max(1.0, total);

  std::vector<UavState> out;
  out.reserve(static_cast<std::size_t>(total / dt) + 2);
  for (long k = 0;; ++k) {
    const double t = k * dt;
    if (t >= total - tol && k > 0) break;
    const double s = profile.distance_at(t);
    const Point2 p = k == 0 ? path.start() : path.point_at_length(std::min(s, length));
    out.push_back({p.x, p.y, profile.speed_at(t), 0.0, 0.0, t0 + t});
  }
  const Point2 end = path.end();
  out.push_back({end.x, end.y, profile.speed_at(total), 0.0, 0.0, t0 + total});
  return out;
}

}  // namespace pep
