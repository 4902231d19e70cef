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

#include "pipecrawl/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pipecrawl {

namespace {

// Reflector mounted this far behind the base of the entrance ramp.
constexpr double kReflectorBack = 0.3;

// Continuum texture outside the photopeak region, spread over this band.
constexpr double kContinuumLoKev = 20.0;
constexpr double kContinuumHiKev = 500.0;

constexpr double kFwhmToSigma = 2.354820045;  // 2 sqrt(2 ln 2)

}  // namespace

const std::array<Eigen::Vector3d, kMapperCols * kMapperRows>& mapper_directions() {
  static const auto dirs = [] {
    std::array<Eigen::Vector3d, kMapperCols * kMapperRows> d;
    const double fov_h = deg2rad(kMapperFovHDeg);
    const double fov_v = deg2rad(kMapperFovVDeg);
    for (int r = 0; r < kMapperRows; ++r) {
      const double el = ((r + 0.5) / kMapperRows - 0.5) * fov_v;
      for (int c = 0; c < kMapperCols; ++c) {
        const double az = ((c + 0.5) / kMapperCols - 0.5) * fov_h;
        d[r * kMapperCols + c] = Eigen::Vector3d(
            std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
            std::sin(el));
      }
    }
    return d;
  }();
  return dirs;
}

PointCloud sample_depth_map(const RobotPose& pose, const Eigen::Vector3d& offset,
                            const World& world, const NoiseConfig& noise,
                            RngStream& rng) {
  PointCloud cloud;
  cloud.points.reserve(kMapperCols * kMapperRows);
  cloud.confidence.reserve(kMapperCols * kMapperRows);
  const Eigen::Matrix3d rot = pose.rotation();
  const Eigen::Vector3d origin = pose.transform(offset);
  const double rate = noise.mapper_outlier_rate;
  for (const Eigen::Vector3d& dir_body : mapper_directions()) {
    const Eigen::Vector3d dir_world = rot * dir_body;
    const RayHit hit = world.cast_ray(origin, dir_world);
    const double u = rng.uniform();
    const double g = rng.gaussian();
    double range;
    double conf;
    if (u < rate) {
      // Spurious short return in front of the surface.
      const double t = u / rate;
      range = 0.3 + t * std::max(0.0, hit.range - 0.3);
      conf = 0.6 * t;
    } else {
      range = hit.range + noise.mapper_sigma * g;
      const double cos_inc = std::max(0.0, -dir_world.dot(hit.normal));
      const double base =
          std::sqrt(cos_inc) / (1.0 + hit.range / noise.mapper_conf_range);
      const double jitter = (u - rate) / (1.0 - rate);
      conf = base + noise.mapper_conf_jitter * (jitter - 0.5);
    }
    range = std::max(range, 0.05);
    cloud.points.emplace_back((dir_body * range).cast<float>());
    cloud.confidence.push_back(static_cast<float>(std::clamp(conf, 0.0, 1.0)));
  }
  return cloud;
}

const Eigen::Vector3d& point_laser_direction(int side) {
  static const std::array<Eigen::Vector3d, 2> dirs = [] {
    const double yaw = deg2rad(26.0);
    const double pitch = deg2rad(26.0);
    std::array<Eigen::Vector3d, 2> d;
    for (int i = 0; i < 2; ++i) {
      const double s = (i == 0) ? 1.0 : -1.0;
      d[i] = Eigen::Vector3d(std::cos(s * yaw) * std::cos(pitch),
                             std::sin(s * yaw) * std::cos(pitch),
                             -std::sin(pitch));
    }
    return d;
  }();
  return dirs[side];
}

LaserPair point_laser_ranges(const RobotPose& pose, const Eigen::Vector3d& offset,
                             const World& world, const NoiseConfig& noise,
                             RngStream& rng) {
  const Eigen::Matrix3d rot = pose.rotation();
  const Eigen::Vector3d origin = pose.transform(offset);
  LaserPair out;
  double* slot[2] = {&out.left, &out.right};
  for (int i = 0; i < 2; ++i) {
    const RayHit hit = world.cast_ray(origin, rot * point_laser_direction(i));
    *slot[i] = hit.range + noise.laser_sigma * rng.gaussian();
  }
  return out;
}

double ray_cylinder_range(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                          double radius) {
  const double a = dir.y() * dir.y() + dir.z() * dir.z();
  if (a < 1e-12) return -1.0;
  const double b = 2.0 * (origin.y() * dir.y() + origin.z() * dir.z());
  const double c =
      origin.y() * origin.y() + origin.z() * origin.z() - radius * radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return -1.0;
  const double t = (-b + std::sqrt(disc)) / (2.0 * a);
  return t > 0.0 ? t : -1.0;
}

ImuSample sample_imu(const RobotPose& pose, const ImuSample& bias,
                     const NoiseConfig& noise, RngStream& rng) {
  const double sigma = deg2rad(noise.imu_angle_sigma_deg);
  ImuSample s;
  s.roll = pose.roll + bias.roll + sigma * rng.gaussian();
  s.pitch = pose.pitch + bias.pitch + sigma * rng.gaussian();
  s.yaw = pose.yaw + bias.yaw + sigma * rng.gaussian();
  return s;
}

RangefinderSample sample_rangefinder(const RobotPose& pose,
                                     const Eigen::Vector3d& offset,
                                     const Scenario& scenario,
                                     const NoiseConfig& noise, RngStream& rng) {
  const double sensor_x = pose.transform(offset).x();
  const double target_x = -(scenario.entrance.setback + kReflectorBack);
  const double true_range = std::max(sensor_x - target_x, 0.05);

  double p_fix = 1.0;
  if (true_range > noise.rangefinder_lock_range) {
    p_fix = std::exp(-(true_range - noise.rangefinder_lock_range) /
                     noise.rangefinder_decay_tau);
  }
  if (noise.rangefinder_dropout_beyond > 0.0 &&
      true_range > noise.rangefinder_dropout_beyond) {
    p_fix = 0.0;
  }

  RangefinderSample s;
  if (rng.uniform() < p_fix) {
    s.range = true_range + noise.rangefinder_sigma * rng.gaussian();
    s.fix = true;
  } else {
    const double hi = std::max(noise.rangefinder_wild_min + 0.5, 0.8 * true_range);
    s.range = rng.uniform(noise.rangefinder_wild_min, hi);
    s.fix = false;
  }
  return s;
}

EncoderSample sample_encoders(double d_true, EncoderState& state,
                              const NoiseConfig& noise, double fault_scale,
                              RngStream& rng) {
  EncoderSample out;
  const double base = d_true * (1.0 + state.scale_bias);
  double* carries[2] = {&state.carry_left, &state.carry_right};
  std::int64_t* ticks[2] = {&out.left_ticks, &out.right_ticks};
  for (int i = 0; i < 2; ++i) {
    const double d = base + noise.encoder_white_sigma * rng.gaussian();
    const double raw = d * noise.encoder_ticks_per_m * fault_scale + *carries[i];
    const double whole = std::floor(raw);
    *ticks[i] = static_cast<std::int64_t>(whole);
    *carries[i] = raw - whole;
  }
  return out;
}

RingRanges sample_profiler(const RobotPose& pose, const Eigen::Vector3d& offset,
                           const World& world, const NoiseConfig& noise,
                           RngStream& rng) {
  RingRanges ring;
  ring.ranges.resize(kProfilerRays);
  const Eigen::Matrix3d rot = pose.rotation();
  const Eigen::Vector3d origin = pose.transform(offset);
  for (int i = 0; i < kProfilerRays; ++i) {
    if (rng.uniform() < noise.profiler_dropout) {
      ring.ranges[i] = -1.0;
      continue;
    }
    const double theta = deg2rad(static_cast<double>(i));
    const Eigen::Vector3d dir_body(0.0, std::sin(theta), std::cos(theta));
    const RayHit hit = world.cast_ray(origin, rot * dir_body);
    ring.ranges[i] = hit.range + noise.profiler_sigma * rng.gaussian();
  }
  return ring;
}

AnnulusResponse::AnnulusResponse(const Geometry& g) {
  if (g.crystal_length <= 0.0 || g.crystal_radius <= 0.0 ||
      g.disc_radius <= g.crystal_radius || g.disc_gap <= g.crystal_length ||
      g.bore_radius <= g.disc_radius) {
    throw std::invalid_argument("annulus geometry is degenerate");
  }
  // Knife-edge cutoffs: the line from a crystal corner (xc, rc) through the
  // disc edge (g/2, rd) reaches the wall radius R at
  //   u = xc + (R - rc) * (g/2 - xc) / (rd - rc),
  // with rc signed. Full crystal visibility ends at the smallest cutoff,
  // the last sliver vanishes at the largest.
  double lo = 1e300;
  double hi = -1e300;
  for (const double xc : {-g.crystal_length / 2.0, g.crystal_length / 2.0}) {
    for (const double rc : {-g.crystal_radius, g.crystal_radius}) {
      const double u =
          xc + (g.bore_radius - rc) * (g.disc_gap / 2.0 - xc) / (g.disc_radius - rc);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
  }
  plateau_end_ = lo;
  support_end_ = hi;
  height_ = 1.0 / (plateau_end_ + support_end_);
}

double AnnulusResponse::eval(double u) const {
  const double a = std::abs(u);
  if (a <= plateau_end_) return height_;
  if (a >= support_end_) return 0.0;
  return height_ * (support_end_ - a) / (support_end_ - plateau_end_);
}

double AnnulusResponse::cumulative(double u) const {
  const double u1 = plateau_end_;
  const double u0 = support_end_;
  const double h = height_;
  if (u <= -u0) return 0.0;
  if (u <= -u1) {
    const double d = u + u0;
    return h * d * d / (2.0 * (u0 - u1));
  }
  if (u <= u1) return h * (u0 - u1) / 2.0 + h * (u + u1);
  if (u < u0) {
    const double d = u0 - u;
    return 1.0 - h * d * d / (2.0 * (u0 - u1));
  }
  return 1.0;
}

double AnnulusResponse::convolve(const DepositProfile& deposit,
                                 double center) const {
  const double lo = center - support_end_;
  const double hi = center + support_end_;
  std::vector<double> knots;
  knots.reserve(deposit.breakpoints.size() + 4);
  knots.push_back(lo);
  for (const double b : {center - plateau_end_, center + plateau_end_}) {
    if (b > lo && b < hi) knots.push_back(b);
  }
  for (const auto& bp : deposit.breakpoints) {
    if (bp.first > lo && bp.first < hi) knots.push_back(bp.first);
  }
  knots.push_back(hi);
  std::sort(knots.begin(), knots.end());

  // Activity and response are both linear between adjacent knots, so the
  // product is quadratic and Simpson's rule is exact per panel.
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i];
    const double b = knots[i + 1];
    if (b - a < 1e-12) continue;
    const double m = 0.5 * (a + b);
    const double fa = deposit.line_activity(a) * eval(a - center);
    const double fm = deposit.line_activity(m) * eval(m - center);
    const double fb = deposit.line_activity(b) * eval(b - center);
    total += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  }
  return total;
}

GammaContext make_gamma_context(const NoiseConfig& noise) {
  GammaContext ctx;
  ctx.efficiency = noise.gamma_efficiency;
  ctx.background_cps = 0.0;  // set by caller from the deposit profile
  ctx.peak_kev = kU235PeakKev;
  ctx.fwhm_frac = noise.gamma_fwhm_frac;
  ctx.cal_kev_per_channel = noise.cal_kev_per_channel;
  ctx.channels = noise.spectrum_channels;
  ctx.roi = default_roi(noise);
  return ctx;
}

Roi default_roi(const NoiseConfig& noise) {
  const double sigma = noise.gamma_fwhm_frac * kU235PeakKev / kFwhmToSigma;
  return Roi{kU235PeakKev - 3.0 * sigma, kU235PeakKev + 3.0 * sigma};
}

namespace {

void deposit_counts(Spectrum& s, int n, double mean_kev, double sigma_kev,
                    double gain, RngStream& rng) {
  for (int i = 0; i < n; ++i) {
    const double e = rng.gaussian(mean_kev, sigma_kev) * gain;
    const int ch = static_cast<int>(std::floor(e / s.cal_kev_per_channel));
    if (ch >= 0 && ch < static_cast<int>(s.counts.size())) ++s.counts[ch];
  }
}

void deposit_flat(Spectrum& s, int n, double lo_kev, double hi_kev, double gain,
                  RngStream& rng) {
  for (int i = 0; i < n; ++i) {
    const double e = rng.uniform(lo_kev, hi_kev) * gain;
    const int ch = static_cast<int>(std::floor(e / s.cal_kev_per_channel));
    if (ch >= 0 && ch < static_cast<int>(s.counts.size())) ++s.counts[ch];
  }
}

}  // namespace

Spectrum sample_gamma(double x, double live_time, const DepositProfile& deposit,
                      const AnnulusResponse& response, const GammaContext& ctx,
                      RngStream& rng) {
  Spectrum s;
  s.counts.assign(ctx.channels, 0);
  s.live_time = live_time;
  s.cal_kev_per_channel = ctx.cal_kev_per_channel;
  if (ctx.dead) return s;

  const double sigma = ctx.fwhm_frac * ctx.peak_kev / kFwhmToSigma;
  const double line_rate = ctx.efficiency * response.convolve(deposit, x);
  const int n_line = rng.poisson(line_rate * live_time);
  deposit_counts(s, n_line, ctx.peak_kev, sigma, ctx.gain, rng);

  // Ambient background: the configured rate lands flat inside the ROI, and an
  // equal-rate continuum fills the rest of the band for texture without
  // changing the in-window rate.
  const double bg = deposit.background_rate;
  const int n_roi = rng.poisson((bg + ctx.extra_roi_cps) * live_time);
  deposit_flat(s, n_roi, ctx.roi.lo_kev, ctx.roi.hi_kev, ctx.gain, rng);
  const double lo_band = ctx.roi.lo_kev - kContinuumLoKev;
  const double hi_band = kContinuumHiKev - ctx.roi.hi_kev;
  const double band = lo_band + hi_band;
  if (band > 0.0) {
    const int n_cont = rng.poisson(bg * live_time);
    for (int i = 0; i < n_cont; ++i) {
      const double u = rng.uniform() * band;
      const double e = (u < lo_band) ? kContinuumLoKev + u
                                     : ctx.roi.hi_kev + (u - lo_band);
      const int ch = static_cast<int>(std::floor(e * ctx.gain / s.cal_kev_per_channel));
      if (ch >= 0 && ch < static_cast<int>(s.counts.size())) ++s.counts[ch];
    }
  }
  return s;
}

Spectrum sample_check_source(double live_time, const NoiseConfig& noise,
                             double gain, bool dead, RngStream& rng) {
  Spectrum s;
  s.counts.assign(noise.spectrum_channels, 0);
  s.live_time = live_time;
  s.cal_kev_per_channel = noise.cal_kev_per_channel;
  if (dead) return s;

  const double sigma = noise.am241_fwhm_frac * noise.am241_energy_kev / kFwhmToSigma;
  const int n = rng.poisson(noise.am241_rate_cps * live_time);
  deposit_counts(s, n, noise.am241_energy_kev, sigma, gain, rng);
  const int n_bg = rng.poisson(10.0 * live_time);
  deposit_flat(s, n_bg, kContinuumLoKev, kContinuumHiKev, gain, rng);
  return s;
}

SensorRig::SensorRig(const Scenario& scenario, const VehicleConfig& vehicle)
    : vehicle_(vehicle),
      noise_(scenario.noise),
      response_(AnnulusResponse::Geometry{0.05, 0.025, 0.10, 0.10,
                                          scenario.pipe_radius()}),
      gamma_ctx_(make_gamma_context(scenario.noise)),
      scenario_(scenario),
      mapper_rng_(derive_stream_seed(scenario.seed, "mapper")),
      laser_rng_(derive_stream_seed(scenario.seed, "laser")),
      imu_rng_(derive_stream_seed(scenario.seed, "imu")),
      rangefinder_rng_(derive_stream_seed(scenario.seed, "rangefinder")),
      encoder_rng_(derive_stream_seed(scenario.seed, "encoder")),
      profiler_rng_(derive_stream_seed(scenario.seed, "profiler")),
      gamma_rng_(derive_stream_seed(scenario.seed, "gamma")) {
  RngStream bias_rng(derive_stream_seed(scenario.seed, "per-run-bias"));
  const double bias_sigma = deg2rad(noise_.imu_bias_sigma_deg);
  imu_bias_.roll = bias_rng.gaussian(0.0, bias_sigma);
  imu_bias_.pitch = bias_rng.gaussian(0.0, bias_sigma);
  imu_bias_.yaw = bias_rng.gaussian(0.0, bias_sigma);
  encoder_state_.scale_bias =
      bias_rng.gaussian(0.0, noise_.encoder_scale_bias_sigma);
}

PointCloud SensorRig::depth_map(const RobotPose& pose, const World& world) {
  return sample_depth_map(pose, vehicle_.mapper_offset, world, noise_, mapper_rng_);
}

LaserPair SensorRig::lasers(const RobotPose& pose, const World& world) {
  return point_laser_ranges(pose, vehicle_.laser_offset, world, noise_, laser_rng_);
}

ImuSample SensorRig::imu(const RobotPose& pose) {
  return sample_imu(pose, imu_bias_, noise_, imu_rng_);
}

RangefinderSample SensorRig::rangefinder(const RobotPose& pose) {
  return sample_rangefinder(pose, vehicle_.rangefinder_offset, scenario_, noise_,
                            rangefinder_rng_);
}

EncoderSample SensorRig::encoders(double d_true, double fault_scale) {
  return sample_encoders(d_true, encoder_state_, noise_, fault_scale, encoder_rng_);
}

RingRanges SensorRig::profiler(const RobotPose& pose, const World& world) {
  return sample_profiler(pose, vehicle_.profiler_offset, world, noise_, profiler_rng_);
}

Spectrum SensorRig::gamma(double x, double live_time, const DepositProfile& deposit,
                          double gain, bool dead, double extra_roi_cps) {
  GammaContext ctx = gamma_ctx_;
  ctx.gain = gain;
  ctx.dead = dead;
  ctx.extra_roi_cps = extra_roi_cps;
  return sample_gamma(x, live_time, deposit, response_, ctx, gamma_rng_);
}

Spectrum SensorRig::check_source(double live_time, double gain, bool dead) {
  return sample_check_source(live_time, noise_, gain, dead, gamma_rng_);
}

double SensorRig::ticks_to_meters(std::int64_t ticks) const {
  return static_cast<double>(ticks) / noise_.encoder_ticks_per_m;
}

}  // namespace pipecrawl
