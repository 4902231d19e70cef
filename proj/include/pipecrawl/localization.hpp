/*
 * Copyright 2026 The Pipecrawl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PIPECRAWL_LOCALIZATION_HPP_
#define PIPECRAWL_LOCALIZATION_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "pipecrawl/radiometry.hpp"
#include "pipecrawl/sensors.hpp"

namespace pipecrawl {

// Distance from the rear profiler plane to the detector plane; converts an
// entrance-plane crossing into the detector coordinate.
inline constexpr double kDetectorFromProfiler = 0.70;

struct EntranceEvent {
  double time = 0.0;
  double odo = 0.0;  // cumulative raw odometry at the crossing
};

// Declares the entrance crossed when the rear profiler ring matches the bore:
// at least 90% of valid returns within +-3 cm of nominal, three rings in a
// row. The stamp interpolates between the last outside and first inside ring.
class EntranceDetector {
 public:
  explicit EntranceDetector(double nominal_radius)
      : nominal_radius_(nominal_radius) {}

  void add_ring(const RingRanges& ring, double odo, double time);
  bool detected() const { return event_.has_value(); }
  const EntranceEvent& event() const { return *event_; }

 private:
  double nominal_radius_;
  int run_ = 0;
  double first_inside_odo_ = 0.0;
  double first_inside_time_ = 0.0;
  double last_outside_odo_ = 0.0;
  double last_outside_time_ = 0.0;
  bool saw_outside_ = false;
  std::optional<EntranceEvent> event_;
};

struct LocNode {
  double time = 0.0;
  double odo = 0.0;          // cumulative raw odometry at node closure
  double odo_delta = 0.0;    // from the previous node
  double abs_meas = 0.0;     // detector coordinate from rangefinder fixes
  int abs_count = 0;
  double x = 0.0;            // estimate after solve()
  double sigma = 0.0;
};

struct LocalizerParams {
  double node_period = 1.0;
  double sigma_anchor = 0.005;
  double sigma_range = 0.02;
  double odo_sigma_frac = 0.02;   // of |odo_delta|
  double odo_sigma_floor = 0.002;
  double gate_window = 0.5;       // innovation bound on absolute fixes
};

// Solves the chain in place: anchor prior on node 0, odometry factors between
// neighbors, absolute factors where fixes exist. The normal equations are
// tridiagonal: Thomas factorization for the solve, backward recurrence for
// the marginal variances.
void solve_graph(std::vector<LocNode>& nodes, const LocalizerParams& params,
                 double anchor_value);

// 1-D trajectory estimator for the detector coordinate. Nodes close once per
// second after the entrance stamp; odometry ties neighbors, gated rangefinder
// fixes (referenced to the reading at the stamp) tie nodes to the rig.
class Localizer {
 public:
  Localizer(const LocalizerParams& params, double nominal_radius);

  // Fixed-rate input. ring may be null except on profiler ticks; rf may be
  // null when no rangefinder sample was taken this tick.
  void add_tick(double time, double odo_delta, const RingRanges* ring,
                const RangefinderSample* rf);

  bool entrance_found() const { return entrance_.detected(); }
  const EntranceEvent& entrance() const { return entrance_.event(); }
  double range_ref() const { return range_ref_; }

  // Live estimate: last solved node plus raw odometry since.
  double live_x() const;
  double live_sigma() const;
  double odo_cum() const { return odo_cum_; }

  void solve();
  const std::vector<LocNode>& nodes() const { return nodes_; }

  // Interpolated batch estimate; valid after solve().
  double position_at(double time) const;
  double sigma_at(double time) const;

  // Fraction of rangefinder samples accepted by the gate since entrance.
  double gate_accept_rate() const;

 private:
  void close_node(double time);

  LocalizerParams params_;
  EntranceDetector entrance_;
  double odo_cum_ = 0.0;
  double time_ = 0.0;
  bool anchored_ = false;
  double range_ref_ = 0.0;
  double next_node_time_ = 0.0;
  std::vector<LocNode> nodes_;
  // Fixes observed before the entrance, kept to derive range_ref at the
  // stamp: (odo, raw range).
  std::vector<std::pair<double, double>> pre_fixes_;
  double pending_abs_sum_ = 0.0;
  int pending_abs_count_ = 0;
  long gate_accepted_ = 0;
  long gate_total_ = 0;
  bool solved_ = false;
};

}  // namespace pipecrawl

#endif  // PIPECRAWL_LOCALIZATION_HPP_
