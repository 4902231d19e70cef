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

#include "pipecrawl/safeguarding.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "Eigen/Dense"

namespace pipecrawl {

namespace {

constexpr double kBodyHalfWidth = 0.15;
constexpr double kBodyHeight = 0.40;        // above the bottom of the bore
constexpr double kCorridorHalfArc = 0.08;   // m of arc around each track line
constexpr int kMinObstacleSupport = 8;
constexpr int kFaceBins = 36;
constexpr int kFaceBinsOccupied = 30;       // >= 300 deg -> full-bore face
constexpr int kRingBins = 24;

double percentile(std::vector<double>& v, double p) {
  if (v.empty()) return 0.0;
  const std::size_t k = static_cast<std::size_t>(
      std::clamp(p, 0.0, 1.0) * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[k];
}

// Orthonormal pipe-frame basis from a fit: x along the axis.
struct PipeBasis {
  Eigen::Vector3d origin;
  Eigen::Vector3d ex, ey, ez;

  explicit PipeBasis(const CylinderFit& fit) {
    origin = fit.axis_point();
    ex = fit.axis_dir();
    ey = (Eigen::Vector3d::UnitY() - ex * ex.y()).normalized();
    ez = ex.cross(ey);
  }
  Eigen::Vector3d to_pipe(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d v = p - origin;
    return {v.dot(ex), v.dot(ey), v.dot(ez)};
  }
};

}  // namespace

std::vector<Eigen::Vector3d> prefilter(const PointCloud& cloud,
                                       double threshold) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.confidence[i] >= threshold) {
      out.emplace_back(cloud.points[i].cast<double>());
    }
  }
  return out;
}

double CylinderFit::distance_to_axis(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d d = axis_dir();
  const Eigen::Vector3d v = p - axis_point();
  return (v - d * v.dot(d)).norm();
}

namespace {

struct GnResult {
  Eigen::Matrix<double, 5, 1> theta;  // cy, cz, a, b, r
  bool ok = false;
};

// Gauss-Newton on e_i = dist(p_i; axis) - r with the analytic Jacobian
// row [-wy, -wz, -(v.d) wy / |d|, -(v.d) wz / |d|, -1], w the unit radial
// component of p - c.
GnResult refine(const std::vector<Eigen::Vector3d>& pts,
                const std::vector<int>& idx,
                Eigen::Matrix<double, 5, 1> theta) {
  GnResult res;
  for (int iter = 0; iter < 3; ++iter) {
    Eigen::Matrix<double, 5, 5> h = Eigen::Matrix<double, 5, 5>::Zero();
    Eigen::Matrix<double, 5, 1> g = Eigen::Matrix<double, 5, 1>::Zero();
    const Eigen::Vector3d c(0.0, theta[0], theta[1]);
    const Eigen::Vector3d d(1.0, theta[2], theta[3]);
    const double dn = d.norm();
    const Eigen::Vector3d dh = d / dn;
    for (const int i : idx) {
      const Eigen::Vector3d v = pts[i] - c;
      const double t = v.dot(dh);
      const Eigen::Vector3d w = v - dh * t;
      const double rho = w.norm();
      if (rho < 1e-9) continue;
      const Eigen::Vector3d wh = w / rho;
      Eigen::Matrix<double, 5, 1> row;
      row << -wh.y(), -wh.z(), -t * wh.y() / dn, -t * wh.z() / dn, -1.0;
      const double e = rho - theta[4];
      h += row * row.transpose();
      g += row * e;
    }
    h.diagonal().array() += 1e-9;
    const Eigen::Matrix<double, 5, 1> delta = h.ldlt().solve(g);
    if (!delta.allFinite()) return res;
    theta -= delta;
    if (delta.norm() < 1e-7) break;
  }
  res.theta = theta;
  res.ok = std::isfinite(theta.sum());
  return res;
}

}  // namespace

CylinderFit fit_cylinder(const std::vector<Eigen::Vector3d>& points,
                         const FitParams& params, RngStream& rng) {
  CylinderFit fit;
  const int n = static_cast<int>(points.size());
  if (n < params.min_points) {
    fit.status = FitStatus::kInsufficientPoints;
    return fit;
  }

  // Fixed scoring subset, evenly strided; cheap and unbiased for ordered
  // grid clouds.
  std::vector<int> subset;
  const int m = std::min(n, params.score_subset);
  subset.reserve(m);
  for (int i = 0; i < m; ++i) subset.push_back(static_cast<int>(i * int64_t{n} / m));

  const double r_lo = 0.5 * params.nominal_radius;
  const double r_hi = 1.5 * params.nominal_radius;

  double best_cy = 0.0, best_cz = 0.0, best_r = 0.0;
  int best_count = 0;
  int needed = params.max_iterations;
  for (int it = 0; it < needed; ++it) {
    int ia = rng.integer(n), ib = rng.integer(n), ic = rng.integer(n);
    if (ia == ib || ib == ic || ia == ic) continue;
    // Circumcircle of the y-z projections.
    const double ay = points[ia].y(), az = points[ia].z();
    const double d1y = points[ib].y() - ay, d1z = points[ib].z() - az;
    const double d2y = points[ic].y() - ay, d2z = points[ic].z() - az;
    const double det = 2.0 * (d1y * d2z - d1z * d2y);
    if (std::abs(det) < 1e-9) continue;
    const double s1 = d1y * d1y + d1z * d1z;
    const double s2 = d2y * d2y + d2z * d2z;
    const double ucy = (d2z * s1 - d1z * s2) / det;
    const double ucz = (d1y * s2 - d2y * s1) / det;
    const double r = std::hypot(ucy, ucz);
    if (r < r_lo || r > r_hi) continue;
    const double cy = ay + ucy, cz = az + ucz;

    int count = 0;
    for (const int i : subset) {
      const double rho = std::hypot(points[i].y() - cy, points[i].z() - cz);
      if (std::abs(rho - r) <= params.inlier_tol) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_cy = cy;
      best_cz = cz;
      best_r = r;
      const double w = static_cast<double>(count) / m;
      const double p_miss = 1.0 - w * w * w;
      if (p_miss < 1e-12) {
        needed = it + 1;
      } else {
        const int k = static_cast<int>(std::ceil(std::log(1e-3) / std::log(p_miss)));
        needed = std::clamp(k, it + 1, params.max_iterations);
      }
    }
  }

  if (best_count < params.min_inlier_fraction * m) {
    fit.status = FitStatus::kNoConsensus;
    return fit;
  }

  std::vector<int> inliers;
  inliers.reserve(n);
  auto collect = [&](double cy, double cz, double a, double b, double r) {
    inliers.clear();
    CylinderFit probe;
    probe.center_y = cy;
    probe.center_z = cz;
    probe.slope_y = a;
    probe.slope_z = b;
    probe.radius = r;
    for (int i = 0; i < n; ++i) {
      if (std::abs(probe.distance_to_axis(points[i]) - r) <= params.inlier_tol) {
        inliers.push_back(i);
      }
    }
  };

  collect(best_cy, best_cz, 0.0, 0.0, best_r);
  Eigen::Matrix<double, 5, 1> theta;
  theta << best_cy, best_cz, 0.0, 0.0, best_r;
  GnResult gn = refine(points, inliers, theta);
  if (gn.ok) {
    collect(gn.theta[0], gn.theta[1], gn.theta[2], gn.theta[3], gn.theta[4]);
    gn = refine(points, inliers, gn.theta);
  }
  if (!gn.ok) {
    fit.status = FitStatus::kNoConsensus;
    return fit;
  }

  const double max_tilt = std::tan(deg2rad(params.max_tilt_deg));
  if (std::abs(gn.theta[2]) > max_tilt || std::abs(gn.theta[3]) > max_tilt ||
      gn.theta[4] < r_lo || gn.theta[4] > r_hi) {
    fit.status = FitStatus::kNoConsensus;
    return fit;
  }

  fit.status = FitStatus::kOk;
  fit.center_y = gn.theta[0];
  fit.center_z = gn.theta[1];
  fit.slope_y = gn.theta[2];
  fit.slope_z = gn.theta[3];
  fit.radius = gn.theta[4];
  fit.inlier_count = static_cast<int>(inliers.size());
  fit.inlier_fraction = static_cast<double>(inliers.size()) / n;
  if (fit.inlier_fraction < params.min_inlier_fraction) {
    fit.status = FitStatus::kNoConsensus;
  }
  return fit;
}

SensorPoseEstimate pose_from_cylinder(const CylinderFit& fit) {
  SensorPoseEstimate e;
  e.offset_y = -fit.center_y;
  e.offset_z = -fit.center_z;
  e.yaw = -std::atan(fit.slope_y);
  e.pitch = -std::atan(fit.slope_z);
  return e;
}

Segmentation segment(const std::vector<Eigen::Vector3d>& points,
                     const CylinderFit& fit, double tol) {
  Segmentation seg;
  const PipeBasis basis(fit);
  for (const auto& p : points) {
    const Eigen::Vector3d q = basis.to_pipe(p);
    const double rho = std::hypot(q.y(), q.z());
    if (std::abs(rho - fit.radius) <= tol) {
      seg.wall.push_back(q);
    } else if (rho < fit.radius - tol) {
      seg.interior.push_back(q);
    } else {
      seg.exterior.push_back(q);
    }
  }
  return seg;
}

ObstacleCheck check_obstacle(const Segmentation& seg, const CylinderFit& fit,
                             const VehicleConfig& vehicle, double lookahead) {
  ObstacleCheck check;
  const double r = fit.radius;
  // Track lines sit at +-half the track width on the bottom of the bore.
  const double half_angle =
      std::asin(std::min(0.5 * vehicle.track_width / r, 0.9));
  const double clock_left = M_PI + half_angle;   // y < 0 side
  const double clock_right = M_PI - half_angle;  // y > 0 side

  // A cluster spanning most of the circumference is a face, not a climbable
  // protrusion; the circle classifier owns that case.
  std::array<bool, kFaceBins> face_bins{};
  int face_count = 0;
  for (const auto& q : seg.interior) {
    if (q.x() < 0.15 || q.x() > lookahead) continue;
    const double theta = std::atan2(q.y(), q.z());
    int bin = static_cast<int>((theta + M_PI) / (2.0 * M_PI) * kFaceBins);
    bin = std::clamp(bin, 0, kFaceBins - 1);
    if (!face_bins[bin]) {
      face_bins[bin] = true;
      ++face_count;
    }
  }
  if (face_count >= kFaceBinsOccupied) return check;

  std::vector<double> xs;
  std::vector<double> heights;
  bool corridor = false, body = false;
  for (const auto& q : seg.interior) {
    if (q.x() < 0.15 || q.x() > lookahead) continue;
    const double rho = std::hypot(q.y(), q.z());
    const double height = r - rho;
    if (height <= vehicle.max_step) continue;
    const double theta = std::atan2(q.y(), q.z());
    bool hit = false;
    for (const double tc : {clock_left, clock_right}) {
      double d = std::remainder(theta - tc, 2.0 * M_PI);
      if (std::abs(d) * rho <= kCorridorHalfArc) {
        hit = true;
        corridor = true;
      }
    }
    if (std::abs(q.y()) <= kBodyHalfWidth && q.z() <= -r + kBodyHeight) {
      hit = true;
      body = true;
    }
    if (hit) {
      xs.push_back(q.x());
      heights.push_back(height);
    }
  }
  if (static_cast<int>(xs.size()) < kMinObstacleSupport) return check;

  check.blocked = true;
  check.support = static_cast<int>(xs.size());
  check.distance = percentile(xs, 0.10);
  check.height = percentile(heights, 0.90);
  check.in_track_corridor = corridor;
  check.in_body_envelope = body;
  return check;
}

SweepParams SweepParams::for_class(DiameterClass c) {
  SweepParams p;
  if (c == DiameterClass::kD30) {
    p.window_lo = 0.8;
    p.window_hi = 2.2;
  } else {
    p.window_lo = 1.15;
    p.window_hi = 2.4;
  }
  return p;
}

std::vector<CircleSlab> sweep_circles(const Segmentation& seg,
                                      const CylinderFit& fit,
                                      const SweepParams& params) {
  const int n_slabs = std::max(
      1, static_cast<int>(std::floor((params.window_hi - params.window_lo) /
                                     params.slab)));
  std::vector<std::vector<const Eigen::Vector3d*>> buckets(n_slabs);
  auto bucket_all = [&](const std::vector<Eigen::Vector3d>& pts) {
    for (const auto& q : pts) {
      const int k = static_cast<int>(
          std::floor((q.x() - params.window_lo) / params.slab));
      if (k >= 0 && k < n_slabs) buckets[k].push_back(&q);
    }
  };
  bucket_all(seg.wall);
  bucket_all(seg.interior);
  bucket_all(seg.exterior);

  const double r_min = 0.3 * fit.radius;
  const double r_max = 1.3 * fit.radius;
  const int n_bins = static_cast<int>((r_max - r_min) / params.radius_bin) + 1;
  std::vector<int> votes;

  std::vector<CircleSlab> slabs(n_slabs);
  for (int k = 0; k < n_slabs; ++k) {
    CircleSlab& slab = slabs[k];
    slab.x_center = params.window_lo + (k + 0.5) * params.slab;
    const auto& pts = buckets[k];

    // Ring search over a coarse center grid around the fitted axis.
    double best_cy = 0.0, best_cz = 0.0;
    int best_votes = 0, best_bin = -1;
    for (int gy = -1; gy <= 1; ++gy) {
      for (int gz = -1; gz <= 1; ++gz) {
        const double cy = gy * params.center_search;
        const double cz = gz * params.center_search;
        votes.assign(n_bins, 0);
        for (const auto* q : pts) {
          const double rho = std::hypot(q->y() - cy, q->z() - cz);
          const int bin = static_cast<int>((rho - r_min) / params.radius_bin);
          if (bin >= 0 && bin < n_bins) ++votes[bin];
        }
        for (int b = 1; b + 1 < n_bins; ++b) {
          const int v = votes[b - 1] + votes[b] + votes[b + 1];
          if (v > best_votes) {
            best_votes = v;
            best_bin = b;
            best_cy = cy;
            best_cz = cz;
          }
        }
      }
    }

    double ring_r_center = -1.0;
    if (best_bin >= 0) {
      const double r_center = r_min + (best_bin + 0.5) * params.radius_bin;
      std::array<bool, kRingBins> ring_bins{};
      double rho_sum = 0.0;
      int ring_n = 0, occupied = 0;
      for (const auto* q : pts) {
        const double rho = std::hypot(q->y() - best_cy, q->z() - best_cz);
        if (std::abs(rho - r_center) <= 1.5 * params.radius_bin) {
          rho_sum += rho;
          ++ring_n;
          const double theta = std::atan2(q->y() - best_cy, q->z() - best_cz);
          int bin = static_cast<int>((theta + M_PI) / (2.0 * M_PI) * kRingBins);
          bin = std::clamp(bin, 0, kRingBins - 1);
          if (!ring_bins[bin]) {
            ring_bins[bin] = true;
            ++occupied;
          }
        }
      }
      slab.ring_count = ring_n;
      slab.ring_occupancy = static_cast<double>(occupied) / kRingBins;
      slab.radius = ring_n > 0 ? rho_sum / ring_n : 0.0;
      ring_r_center = r_center;
    }

    // Face evidence: deep-interior points that are not part of the ring. A
    // hollow narrow ring (reducer bore) must stay ring evidence, not read as
    // a blocking face.
    std::array<bool, kRingBins> int_bins{};
    int int_occupied = 0;
    for (const auto* q : pts) {
      const double rho = std::hypot(q->y(), q->z());
      if (rho >= fit.radius - 0.06) continue;
      if (ring_r_center > 0.0) {
        const double rho_c = std::hypot(q->y() - best_cy, q->z() - best_cz);
        if (std::abs(rho_c - ring_r_center) <= 1.5 * params.radius_bin) continue;
      }
      ++slab.interior_count;
      const double theta = std::atan2(q->y(), q->z());
      int bin = static_cast<int>((theta + M_PI) / (2.0 * M_PI) * kRingBins);
      bin = std::clamp(bin, 0, kRingBins - 1);
      if (!int_bins[bin]) {
        int_bins[bin] = true;
        ++int_occupied;
      }
    }
    const double int_occ = static_cast<double>(int_occupied) / kRingBins;

    if (slab.interior_count >= params.min_interior_points &&
        int_occ >= params.min_interior_occupancy) {
      slab.state = SlabState::kFilled;
    } else if (slab.ring_count >= params.min_ring_points &&
               slab.ring_occupancy >= params.min_ring_occupancy) {
      slab.state = SlabState::kOpen;
    } else {
      slab.state = SlabState::kNone;
    }
  }
  return slabs;
}

const char* to_string(EndKind k) {
  switch (k) {
    case EndKind::kNone: return "none";
    case EndKind::kClosedPipe: return "closed_pipe";
    case EndKind::kOpenEnd: return "open_end";
    case EndKind::kReducer: return "reducer";
  }
  return "none";
}

EndDetection classify_end(const std::vector<CircleSlab>& slabs,
                          const Segmentation& seg, const CylinderFit& fit,
                          const SweepParams& params, double nominal_radius) {
  EndDetection det;
  const int n = static_cast<int>(slabs.size());
  if (n == 0) return det;

  // Reducer: interpolated ring-radius crossing below 90% of nominal, with at
  // least two narrowed slices behind it.
  const double r_cross = 0.9 * nominal_radius;
  for (int k = 0; k + 1 < n; ++k) {
    if (slabs[k].state != SlabState::kOpen ||
        slabs[k + 1].state != SlabState::kOpen) {
      continue;
    }
    if (slabs[k].radius >= r_cross && slabs[k + 1].radius < r_cross) {
      int narrowed = 0;
      for (int j = k + 1; j < n; ++j) {
        if (slabs[j].state == SlabState::kOpen && slabs[j].radius < r_cross) {
          ++narrowed;
        }
      }
      if (narrowed >= 2) {
        const double f = (slabs[k].radius - r_cross) /
                         (slabs[k].radius - slabs[k + 1].radius);
        det.kind = EndKind::kReducer;
        det.x = slabs[k].x_center + f * params.slab;
        return det;
      }
    }
  }

  // Closed pipe: a filled slice persisting, where "persisting" also covers a
  // thin face whose shadow blanks every slab behind it.
  for (int k = 0; k < n; ++k) {
    if (slabs[k].state != SlabState::kFilled) continue;
    bool spurious = false;
    for (int j = k + 1; j < std::min(n, k + 4); ++j) {
      if (slabs[j].state == SlabState::kOpen) spurious = true;
    }
    if (spurious) continue;
    std::vector<double> xs;
    for (const auto& q : seg.interior) {
      if (std::abs(q.x() - slabs[k].x_center) <= 1.5 * params.slab &&
          std::hypot(q.y(), q.z()) < fit.radius - 0.06) {
        xs.push_back(q.x());
      }
    }
    det.kind = EndKind::kClosedPipe;
    det.x = xs.empty() ? slabs[k].x_center : percentile(xs, 0.5);
    return det;
  }

  // Open end: wall ring vanishing well inside the window, at least two empty
  // slabs deep, after at least two solid open slices.
  for (int k = 1; k + 2 < n; ++k) {
    if (slabs[k].state != SlabState::kOpen ||
        slabs[k - 1].state != SlabState::kOpen) {
      continue;
    }
    if (slabs[k + 1].state != SlabState::kNone ||
        slabs[k + 2].state != SlabState::kNone) {
      continue;
    }
    bool wall_later = false;
    for (int j = k + 3; j < n; ++j) {
      if (slabs[j].state != SlabState::kNone) wall_later = true;
    }
    if (wall_later) continue;
    const double x_trans = slabs[k].x_center + 0.5 * params.slab;
    if (x_trans > params.window_hi - 0.25 || x_trans < params.window_lo + 0.1) {
      continue;
    }
    // Far slabs thin out with range and can fail the ring vote in a healthy
    // bore. Through a true opening there is no wall at all, so any remaining
    // wall evidence past the transition vetoes the call.
    int wall_beyond = 0;
    for (const auto& q : seg.wall) {
      if (q.x() > x_trans + 0.1 && q.x() <= params.window_hi) ++wall_beyond;
    }
    if (wall_beyond >= 5) continue;
    std::vector<double> xs;
    for (const auto& q : seg.wall) {
      if (q.x() >= x_trans - 0.3 && q.x() <= x_trans + 0.3) xs.push_back(q.x());
    }
    det.kind = EndKind::kOpenEnd;
    det.x = xs.empty() ? x_trans : percentile(xs, 0.99);
    return det;
  }
  return det;
}

double FirFilter::push(double v) {
  window_.push_back(v);
  sum_ += v;
  if (static_cast<int>(window_.size()) > taps_) {
    sum_ -= window_.front();
    window_.pop_front();
  }
  return sum_ / static_cast<double>(window_.size());
}

void FirFilter::reset() {
  window_.clear();
  sum_ = 0.0;
}

LaserCheck secondary_check(double filtered_left, double filtered_right,
                           const ImuSample& imu,
                           const SensorPoseEstimate& pose_estimate,
                           const VehicleConfig& vehicle, double nominal_radius,
                           double short_delta, double long_delta) {
  LaserCheck check;
  check.filtered_left = filtered_left;
  check.filtered_right = filtered_right;

  RobotPose att;
  att.roll = imu.roll;
  att.pitch = imu.pitch;
  att.yaw = imu.yaw;
  const Eigen::Matrix3d rot = att.rotation();
  const Eigen::Vector3d mount =
      rot * vehicle.laser_offset +
      Eigen::Vector3d(0.0, pose_estimate.offset_y, pose_estimate.offset_z);

  const double* filtered[2] = {&filtered_left, &filtered_right};
  bool* shorts[2] = {&check.short_left, &check.short_right};
  bool* longs[2] = {&check.long_left, &check.long_right};
  double* expected[2] = {&check.expected_left, &check.expected_right};
  for (int i = 0; i < 2; ++i) {
    const Eigen::Vector3d dir = rot * point_laser_direction(i);
    const double exp_range = ray_cylinder_range(mount, dir, nominal_radius);
    *expected[i] = exp_range;
    if (exp_range <= 0.0) continue;
    if (exp_range - *filtered[i] > short_delta) *shorts[i] = true;
    if (*filtered[i] - exp_range > long_delta) *longs[i] = true;
  }
  return check;
}

bool pitch_exceeded(const ImuSample& imu, double max_pitch_deg) {
  return std::abs(imu.pitch) > deg2rad(max_pitch_deg);
}

SafeguardPipeline::SafeguardPipeline(DiameterClass diameter,
                                     const VehicleConfig& vehicle,
                                     std::uint64_t seed)
    : vehicle_(vehicle),
      sweep_(SweepParams::for_class(diameter)),
      conf_threshold_(0.25),
      rng_(derive_stream_seed(seed, "ransac")) {
  fit_params_.nominal_radius =
      diameter == DiameterClass::kD30 ? 0.381 : 0.5334;
}

SafeguardFrame SafeguardPipeline::process(const PointCloud& cloud,
                                          const LaserPair& lasers,
                                          const ImuSample& imu) {
  SafeguardFrame frame;
  const std::vector<Eigen::Vector3d> pts = prefilter(cloud, conf_threshold_);
  CylinderFit fit = fit_cylinder(pts, fit_params_, rng_);
  frame.fit_fresh = fit.ok();
  if (frame.fit_fresh) {
    last_fit_ = fit;
    stale_ticks_ = 0;
  } else if (last_fit_) {
    ++stale_ticks_;
    fit = *last_fit_;
    frame.fit_stale = stale_ticks_ > kStaleBudgetTicks;
  }
  frame.fit = fit;

  if (fit.ok()) {
    frame.pose_estimate = pose_from_cylinder(fit);
    const Segmentation seg = segment(pts, fit);
    frame.obstacle = check_obstacle(seg, fit, vehicle_);
    const std::vector<CircleSlab> slabs = sweep_circles(seg, fit, sweep_);
    frame.end = classify_end(slabs, seg, fit, sweep_, fit_params_.nominal_radius);
  }

  const double fl = fir_left_.push(lasers.left);
  const double fr = fir_right_.push(lasers.right);
  frame.laser = secondary_check(fl, fr, imu, frame.pose_estimate, vehicle_,
                                fit_params_.nominal_radius);
  short_run_ = frame.laser.any_short() ? short_run_ + 1 : 0;
  long_run_ = frame.laser.any_long() ? long_run_ + 1 : 0;
  frame.laser_short_debounced = short_run_ >= kLaserDebounce;
  frame.laser_long_debounced = long_run_ >= kLaserDebounce;
  frame.pitch_fault = pitch_exceeded(imu, vehicle_.max_pitch_deg);
  return frame;
}

}  // namespace pipecrawl
