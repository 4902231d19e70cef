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

#include "pipecrawl/localization.hpp"

#include <algorithm>
#include <cmath>

namespace pipecrawl {

void EntranceDetector::add_ring(const RingRanges& ring, double odo,
                                double time) {
  if (event_) return;
  int valid = 0, good = 0;
  for (const double r : ring.ranges) {
    if (r <= 0.0) continue;
    ++valid;
    if (std::abs(r - nominal_radius_) <= 0.03) ++good;
  }
  const bool inside =
      valid >= static_cast<int>(ring.ranges.size()) / 2 && good >= 0.9 * valid;
  if (inside) {
    if (run_ == 0) {
      first_inside_odo_ = odo;
      first_inside_time_ = time;
    }
    if (++run_ >= 3) {
      EntranceEvent ev;
      if (saw_outside_) {
        ev.odo = 0.5 * (last_outside_odo_ + first_inside_odo_);
        ev.time = 0.5 * (last_outside_time_ + first_inside_time_);
      } else {
        ev.odo = first_inside_odo_;
        ev.time = first_inside_time_;
      }
      event_ = ev;
    }
  } else {
    run_ = 0;
    last_outside_odo_ = odo;
    last_outside_time_ = time;
    saw_outside_ = true;
  }
}

// Tridiagonal normal equations from the anchor, odometry, and absolute
// factors; Thomas (LDL) solve plus the backward recurrence for the marginal
// variances: C_nn = 1/D_n, C_ii = 1/D_i + l_i^2 C_{i+1,i+1}.
void solve_graph(std::vector<LocNode>& nodes, const LocalizerParams& params,
                 double anchor_value) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) return;
  std::vector<double> d(n, 0.0), e(std::max(0, n - 1), 0.0), b(n, 0.0);

  const double wa = 1.0 / (params.sigma_anchor * params.sigma_anchor);
  d[0] += wa;
  b[0] += wa * anchor_value;

  for (int k = 0; k + 1 < n; ++k) {
    const double delta = nodes[k + 1].odo_delta;
    const double sigma =
        std::max(params.odo_sigma_floor, params.odo_sigma_frac * std::abs(delta));
    const double w = 1.0 / (sigma * sigma);
    d[k] += w;
    d[k + 1] += w;
    e[k] -= w;
    b[k] -= w * delta;
    b[k + 1] += w * delta;
  }

  for (int k = 0; k < n; ++k) {
    if (nodes[k].abs_count > 0) {
      const double w =
          nodes[k].abs_count / (params.sigma_range * params.sigma_range);
      d[k] += w;
      b[k] += w * nodes[k].abs_meas;
    }
  }

  std::vector<double> bigd(n), l(std::max(0, n - 1)), y(n), x(n), c(n);
  bigd[0] = d[0];
  y[0] = b[0];
  for (int i = 0; i + 1 < n; ++i) {
    l[i] = e[i] / bigd[i];
    bigd[i + 1] = d[i + 1] - e[i] * l[i];
    y[i + 1] = b[i + 1] - l[i] * y[i];
  }
  x[n - 1] = y[n - 1] / bigd[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    x[i] = y[i] / bigd[i] - l[i] * x[i + 1];
  }
  c[n - 1] = 1.0 / bigd[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    c[i] = 1.0 / bigd[i] + l[i] * l[i] * c[i + 1];
  }
  for (int i = 0; i < n; ++i) {
    nodes[i].x = x[i];
    nodes[i].sigma = std::sqrt(c[i]);
  }
}

Localizer::Localizer(const LocalizerParams& params, double nominal_radius)
    : params_(params), entrance_(nominal_radius) {}

void Localizer::add_tick(double time, double odo_delta, const RingRanges* ring,
                         const RangefinderSample* rf) {
  time_ = time;
  odo_cum_ += odo_delta;

  if (!entrance_.detected()) {
    if (rf != nullptr) {
      pre_fixes_.emplace_back(odo_cum_, rf->range);
      if (pre_fixes_.size() > 100) {
        pre_fixes_.erase(pre_fixes_.begin());
      }
    }
    if (ring != nullptr) {
      entrance_.add_ring(*ring, odo_cum_, time);
      if (entrance_.detected()) {
        // Reference range at the stamp: every buffered reading shifted back
        // to the stamp position by odometry, then the median to shed wild
        // returns.
        const double stamp_odo = entrance_.event().odo;
        std::vector<double> shifted;
        shifted.reserve(pre_fixes_.size());
        for (const auto& [odo, range] : pre_fixes_) {
          shifted.push_back(range - (odo - stamp_odo));
        }
        if (!shifted.empty()) {
          const std::size_t mid = shifted.size() / 2;
          std::nth_element(shifted.begin(), shifted.begin() + mid, shifted.end());
          range_ref_ = shifted[mid];
        }
        LocNode node0;
        node0.time = entrance_.event().time;
        node0.odo = stamp_odo;
        node0.x = kDetectorFromProfiler;
        nodes_.push_back(node0);
        anchored_ = true;
        next_node_time_ = node0.time + params_.node_period;
        solved_ = false;
      }
    }
    return;
  }

  if (rf != nullptr) {
    ++gate_total_;
    const double abs = rf->range - range_ref_ + kDetectorFromProfiler;
    const double pred = live_x();
    if (std::abs(abs - pred) <= params_.gate_window) {
      ++gate_accepted_;
      // Referenced to the odometry origin so node closure can translate it
      // to the closing position exactly.
      pending_abs_sum_ += abs - odo_cum_;
      ++pending_abs_count_;
    }
  }
  if (time >= next_node_time_ - 1e-9) close_node(time);
}

void Localizer::close_node(double time) {
  LocNode node;
  node.time = time;
  node.odo = odo_cum_;
  node.odo_delta = odo_cum_ - nodes_.back().odo;
  if (pending_abs_count_ > 0) {
    node.abs_meas = pending_abs_sum_ / pending_abs_count_ + odo_cum_;
    node.abs_count = pending_abs_count_;
  }
  node.x = nodes_.back().x + node.odo_delta;
  pending_abs_sum_ = 0.0;
  pending_abs_count_ = 0;
  nodes_.push_back(node);
  next_node_time_ += params_.node_period;
  solved_ = false;
}

double Localizer::live_x() const {
  if (nodes_.empty()) return odo_cum_ + kDetectorFromProfiler;
  const LocNode& last = nodes_.back();
  return last.x + (odo_cum_ - last.odo);
}

double Localizer::live_sigma() const {
  if (nodes_.empty()) return 1.0;
  const LocNode& last = nodes_.back();
  return last.sigma + params_.odo_sigma_frac * std::abs(odo_cum_ - last.odo);
}

void Localizer::solve() {
  if (solved_) return;
  solve_graph(nodes_, params_, kDetectorFromProfiler);
  solved_ = true;
}

double Localizer::position_at(double time) const {
  if (nodes_.empty()) return 0.0;
  if (time <= nodes_.front().time) return nodes_.front().x;
  if (time >= nodes_.back().time) return nodes_.back().x;
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), time,
      [](const LocNode& node, double t) { return node.time < t; });
  const LocNode& hi = *it;
  const LocNode& lo = *(it - 1);
  const double f = (time - lo.time) / std::max(1e-9, hi.time - lo.time);
  return lo.x + f * (hi.x - lo.x);
}

double Localizer::sigma_at(double time) const {
  if (nodes_.empty()) return 0.0;
  if (time <= nodes_.front().time) return nodes_.front().sigma;
  if (time >= nodes_.back().time) return nodes_.back().sigma;
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), time,
      [](const LocNode& node, double t) { return node.time < t; });
  // Conservative between nodes: the worse bracket wins.
  return std::max((it - 1)->sigma, it->sigma);
}

double Localizer::gate_accept_rate() const {
  return gate_total_ > 0 ? static_cast<double>(gate_accepted_) / gate_total_
                         : 0.0;
}

}  // namespace pipecrawl
