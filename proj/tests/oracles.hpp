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

// Independent reference implementations the tests compare against. These
// deliberately avoid the production code paths: ray marching over the solid
// predicate instead of analytic intersection, dense matrix least squares
// instead of the tridiagonal solver, ray-blocking geometry instead of the
// closed-form collimator cutoffs.

#ifndef PIPECRAWL_TESTS_ORACLES_HPP_
#define PIPECRAWL_TESTS_ORACLES_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pipecrawl/localization.hpp"
#include "pipecrawl/sensors.hpp"
#include "pipecrawl/world.hpp"

namespace pipecrawl::oracle {

// First range along origin + t*dir where solid_at flips, by coarse marching
// plus bisection. Returns a negative value when nothing is hit before
// max_range. Step must be smaller than the thinnest solid (valve disc, 2 cm).
inline double march_first_hit(const World& world, const Eigen::Vector3d& origin,
                              const Eigen::Vector3d& dir, double max_range,
                              double step = 0.004, double tol = 1e-7) {
  double t_prev = 0.0;
  for (double t = step; t <= max_range + step; t += step) {
    if (world.solid_at(origin + t * dir)) {
      double lo = t_prev, hi = t;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (world.solid_at(origin + mid * dir) ? hi : lo) = mid;
      }
      return 0.5 * (lo + hi);
    }
    t_prev = t;
  }
  return -1.0;
}

// Dense weighted least squares over the same factors the graph solver uses:
// anchor prior on node 0, odometry between neighbors, averaged absolute
// fixes. Solved with Eigen's dense inverse; sigmas from the covariance
// diagonal.
inline void dense_wls(const std::vector<LocNode>& nodes,
                      const LocalizerParams& params, double anchor_value,
                      std::vector<double>* x_out, std::vector<double>* sigma_out) {
  const int n = static_cast<int>(nodes.size());
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  const double wa = 1.0 / (params.sigma_anchor * params.sigma_anchor);
  info(0, 0) += wa;
  rhs(0) += wa * anchor_value;

  for (int k = 0; k + 1 < n; ++k) {
    const double delta = nodes[k + 1].odo_delta;
    const double sigma = std::max(params.odo_sigma_floor,
                                  params.odo_sigma_frac * std::abs(delta));
    const double w = 1.0 / (sigma * sigma);
    info(k, k) += w;
    info(k + 1, k + 1) += w;
    info(k, k + 1) -= w;
    info(k + 1, k) -= w;
    rhs(k) -= w * delta;
    rhs(k + 1) += w * delta;
  }
  for (int k = 0; k < n; ++k) {
    if (nodes[k].abs_count > 0) {
      const double w =
          nodes[k].abs_count / (params.sigma_range * params.sigma_range);
      info(k, k) += w;
      rhs(k) += w * nodes[k].abs_meas;
    }
  }

  const Eigen::MatrixXd cov = info.inverse();
  const Eigen::VectorXd x = cov * rhs;
  x_out->resize(n);
  sigma_out->resize(n);
  for (int i = 0; i < n; ++i) {
    (*x_out)[i] = x(i);
    (*sigma_out)[i] = std::sqrt(cov(i, i));
  }
}

// Fraction of the crystal's side profile visible from a wall point at axial
// offset u, through the two annular shield discs, by dense 2-D ray blocking.
// The profile is the rectangle [-L/2, L/2] x [-rc, rc] in (axial, signed
// radial); the discs live at axial +-gap/2 and are solid out to disc_radius,
// so a crossing at |radial| <= disc_radius is absorbed while rays through the
// open annulus between disc edge and wall pass.
inline double annulus_visible_fraction(const AnnulusResponse::Geometry& g,
                                       double u, int grid = 161) {
  const double src_x = u;
  const double src_r = g.bore_radius;
  int visible = 0, total = 0;
  for (int i = 0; i < grid; ++i) {
    const double xs = -g.crystal_length / 2.0 +
                      g.crystal_length * i / (grid - 1.0);
    for (int k = 0; k < grid; ++k) {
      const double rs = -g.crystal_radius + 2.0 * g.crystal_radius * k / (grid - 1.0);
      ++total;
      bool blocked = false;
      for (const double xd : {-g.disc_gap / 2.0, g.disc_gap / 2.0}) {
        // Radial coordinate where the ray crosses the disc plane, if the
        // segment from source to crystal point crosses it at all.
        const double dx = xs - src_x;
        if (std::abs(dx) < 1e-12) continue;
        const double f = (xd - src_x) / dx;
        if (f <= 0.0 || f >= 1.0) continue;
        const double r_at = src_r + f * (rs - src_r);
        if (std::abs(r_at) <= g.disc_radius) {
          blocked = true;
          break;
        }
      }
      if (!blocked) ++visible;
    }
  }
  return static_cast<double>(visible) / total;
}

// Largest |u| with full visibility and smallest |u| with none, by bisection
// on the monotone visibility fraction.
inline void annulus_cutoffs(const AnnulusResponse::Geometry& g,
                            double* plateau, double* support) {
  auto full = [&](double u) { return annulus_visible_fraction(g, u) >= 1.0; };
  auto any = [&](double u) { return annulus_visible_fraction(g, u) > 0.0; };
  double lo = 0.0, hi = 5.0;
  while (hi - lo > 1e-5) {
    const double mid = 0.5 * (lo + hi);
    (full(mid) ? lo : hi) = mid;
  }
  *plateau = 0.5 * (lo + hi);
  lo = 0.0;
  hi = 5.0;
  while (hi - lo > 1e-5) {
    const double mid = 0.5 * (lo + hi);
    (any(mid) ? lo : hi) = mid;
  }
  *support = 0.5 * (lo + hi);
}

}  // namespace pipecrawl::oracle

#endif  // PIPECRAWL_TESTS_ORACLES_HPP_
