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

#include <array>
#include <span>
#include <vector>

#include "pep/core.hpp"

namespace pep {

/// Planar curve made of natural cubic splines x(u), y(u) over chord-length
/// knots, with an arc-length table for uniform-speed traversal.
class SmoothPath {
 public:
  /// Number of Gauss-Legendre panels per span in the length table.
  static constexpr int kPanelsPerSpan = 4;

  SmoothPath() = default;

  Point2 point(double u) const;
  /// dr/du
  Point2 tangent(double u) const;

  double total_length() const { return length_table_.back(); }
  /// Parameter u at which the arc length from the start equals `s`.
  double param_at_length(double s) const;
  Point2 point_at_length(double s) const { return point(param_at_length(s)); }

  const std::vector<double>& knots() const { return knots_; }
  std::size_t num_spans() const { return knots_.size() - 1; }
  /// Exact first and last control points.
  Point2 start() const { return controls_.front(); }
  Point2 end() const { return controls_.back(); }

  /// The sub-curve made of spans [first_span, num_spans()).
  SmoothPath tail(std::size_t first_span) const;

 private:
  friend SmoothPath smooth(std::span<const Point2> control_points);

  struct Span {
    std::array<double, 4> cx;  // x(u_i + t) = cx0 + cx1 t + cx2 t^2 + cx3 t^3
    std::array<double, 4> cy;
  };

  std::size_t span_index(double u) const;
  double speed(double u) const;
  double panel_length(double a, double b) const;
  void build_length_table();

  std::vector<Point2> controls_;
  std::vector<double> knots_;
  std::vector<Span> spans_;
  std::vector<double> panel_params_;  // panel boundaries in u
  std::vector<double> length_table_;  // cumulative length at each boundary
};

/// Interpolating natural cubic spline through the control points. Two points
/// yield the straight segment. Throws ValidationError on fewer than two
/// points or repeated consecutive points.
SmoothPath smooth(std::span<const Point2> control_points);

/// Ramp from v_cur to v_tmp at a_max, then cruise at v_tmp.
struct VelocityProfile {
  double v_cur = 0.0;
  double v_tmp = 0.0;
  double a_max = 1.0;

  double ramp_time() const;
  double ramp_distance() const;
  double duration(double length) const;
  double distance_at(double t) const;
  double speed_at(double t) const;
};

/// States along the path every `dt` seconds starting at time t0; the last
/// state sits exactly on the path end. Throws RampTooLongError if the ramp
/// does not fit.
std::vector<UavState> sample_states(const SmoothPath& path, const VelocityProfile& profile, double dt,
                                    double t0 = 0.0);

}  // namespace pep
