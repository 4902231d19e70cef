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

#include "pipecrawl/mission.hpp"

#include <algorithm>
#include <cmath>

#include "pipecrawl/safeguarding.hpp"
#include "pipecrawl/sensors.hpp"
#include "pipecrawl/vehicle.hpp"

namespace pipecrawl {

namespace {

// Injected fault state resolved at one instant of mission time.
struct FaultRuntime {
  double gain = 1.0;
  bool dead_detector = false;
  double encoder_scale = 1.0;
  bool temp_ramp = false;
  double temp_ramp_t0 = 0.0;
  double temp_ramp_rate = 0.0;
  double disk_override = -1.0;
  bool hang = false;
  double hang_t0 = 0.0;
  double hang_duration = 0.0;
  double battery_mult = 1.0;
  double contamination_cps = 0.0;

  void update(const std::vector<FaultInjection>& faults, double t) {
    for (const auto& f : faults) {
      if (t < f.time) continue;
      switch (f.kind) {
        case FaultInjection::Kind::kGainShift:
          gain = f.factor;
          break;
        case FaultInjection::Kind::kDeadDetector:
          dead_detector = true;
          break;
        case FaultInjection::Kind::kEncoderScale:
          encoder_scale = f.factor;
          break;
        case FaultInjection::Kind::kTempRunaway:
          if (!temp_ramp) {
            temp_ramp = true;
            temp_ramp_t0 = f.time;
            temp_ramp_rate = f.factor;
          }
          break;
        case FaultInjection::Kind::kDiskLow:
          disk_override = f.factor;
          break;
        case FaultInjection::Kind::kNodeHang:
          if (!hang) {
            hang = true;
            hang_t0 = f.time;
            hang_duration = f.factor;
          }
          break;
        case FaultInjection::Kind::kBatteryDrain:
          battery_mult = f.factor;
          break;
        case FaultInjection::Kind::kContamination:
          contamination_cps = f.factor;
          break;
      }
    }
  }

  double heartbeat_age(double t, double tick_dt) const {
    if (!hang) return tick_dt;
    const double since = t - hang_t0;
    if (since < 0.0) return tick_dt;
    if (hang_duration > 0.0 && since > hang_duration) return tick_dt;
    return since;
  }
};

bool is_moving_state(MissionState s) {
  return s == MissionState::kForward || s == MissionState::kApproach ||
         s == MissionState::kReverse || s == MissionState::kDock;
}

}  // namespace

MissionResult run_mission(const Scenario& scenario, const MissionParams& params) {
  MissionResult res;
  res.scenario = scenario;

  World world(scenario);
  const VehicleConfig vcfg = VehicleConfig::for_class(scenario.diameter_class);

  DeployError dep_err;
  const auto deployed = deploy(scenario.entrance, vcfg, &dep_err);
  if (!deployed) {
    res.exit_code = 2;
    res.final_state = MissionState::kFault;
    res.deploy_error = dep_err.message();
    res.events.push_back(
        {0.0, MissionState::kFault, "deploy_fail:" + dep_err.axis, 0.0});
    return res;
  }
  RobotPose pose = *deployed;
  const double deploy_body_x = pose.x;

  SensorRig rig(scenario, vcfg);
  SafeguardPipeline safeguard(scenario.diameter_class, vcfg, scenario.seed);
  Localizer loc(LocalizerParams{}, scenario.pipe_radius());
  ExecParams ep;
  ep.commanded_distance = scenario.commanded_distance;
  ep.cruise_speed = vcfg.speed;
  Executive exec(ep, vcfg);
  RngStream dyn_rng(derive_stream_seed(scenario.seed, "dynamics"));
  const Roi roi = default_roi(scenario.noise);

  FaultRuntime faults;
  double battery = params.battery_capacity_wh;
  double drain_ema_w = params.idle_power_w;

  // QC orchestration: entry latch and acquisition bookkeeping per phase.
  double qc_t0 = -1.0;
  MissionState qc_phase = MissionState::kIdle;

  // Per-second accumulators for the 1 Hz gamma acquisition.
  std::vector<RingRanges> second_rings;
  double second_pitch_max = 0.0;
  double second_offtrack_max = 0.0;
  double x_det_second_start = pose.transform(vcfg.detector_offset).x();

  int silent_run = 0;
  bool detector_silent = false;
  bool after_turnaround = false;
  bool entrance_seen = false;
  MissionState prev_state = MissionState::kIdle;
  double odo_delta_prev = 0.0;

  const double dt = vcfg.tick_dt;
  const long max_ticks = static_cast<long>(
      (2.0 * scenario.pipe_length / vcfg.speed + 1500.0) / dt);

  for (long tick = 0; tick < max_ticks; ++tick) {
    const double t = tick * dt;
    faults.update(scenario.faults, t);

    double temp = params.base_temp_c;
    if (faults.temp_ramp && t > faults.temp_ramp_t0) {
      temp += faults.temp_ramp_rate * (t - faults.temp_ramp_t0);
    }
    double disk_free = std::max(0.95 - 1e-5 * t, 0.10);
    if (faults.disk_override >= 0.0) disk_free = faults.disk_override;

    HealthTelemetry health;
    health.temp_c = temp;
    health.heartbeat_age = faults.heartbeat_age(t, dt);
    health.battery_wh = battery;
    const double time_home = std::max(loc.live_x(), 0.0) / vcfg.speed;
    health.battery_reserve_wh = 2.0 * time_home * drain_ema_w / 3600.0;
    health.disk_free_frac = disk_free;

    // QC phases: park for the duration, then take the check-source and
    // background acquisitions back to back and let the executive move on.
    const MissionState state_now = exec.state();
    if (state_now == MissionState::kQcPre || state_now == MissionState::kQcPost) {
      if (qc_phase != state_now) {
        qc_phase = state_now;
        qc_t0 = t;
      }
      if (t - qc_t0 >= params.qc_duration_s - dt / 2) {
        const double x_det = pose.transform(vcfg.detector_offset).x();
        const double live = scenario.noise.qc_live_time;
        const Spectrum cs =
            rig.check_source(live, faults.gain, faults.dead_detector);
        CheckSourceExpectation exp;
        exp.energy_kev = scenario.noise.am241_energy_kev;
        exp.rate_cps = scenario.noise.am241_rate_cps;
        exp.fwhm_kev =
            scenario.noise.am241_fwhm_frac * scenario.noise.am241_energy_kev;
        const QcCheck qc = check_source_qc(cs, exp);
        const bool post = state_now == MissionState::kQcPost;
        const Spectrum bg =
            rig.gamma(x_det, live, scenario.deposit, faults.gain,
                      faults.dead_detector, post ? faults.contamination_cps : 0.0);
        const double bg_roi = roi_counts(bg, roi);
        if (!post) {
          res.qc_pre = qc;
          res.pre_background_roi = bg_roi;
          res.qc_pre_pass = qc.pass;
          exec.complete_qc(qc.pass, t);
        } else {
          res.qc_post = qc;
          res.post_background_roi = bg_roi;
          res.contamination =
              contamination_check(res.pre_background_roi, bg_roi);
          res.qc_post_pass = qc.pass && res.contamination.pass;
          exec.complete_qc(res.qc_post_pass, t);
        }
        qc_phase = MissionState::kIdle;
        qc_t0 = -1.0;
      }
    }

    // Sensor sweep at the current pose.
    const ImuSample imu = rig.imu(pose);
    const RangefinderSample rf = rig.rangefinder(pose);
    RingRanges ring;
    const bool have_ring = (tick % 5 == 0);
    if (have_ring) ring = rig.profiler(pose, world);

    SafeguardFrame sframe;
    if (is_moving_state(exec.state())) {
      const PointCloud cloud = rig.depth_map(pose, world);
      const LaserPair lasers = rig.lasers(pose, world);
      sframe = safeguard.process(cloud, lasers, imu);
    }

    // Localization consumes exactly what was measured at this pose.
    const std::size_t nodes_before = loc.nodes().size();
    loc.add_tick(t, odo_delta_prev, have_ring ? &ring : nullptr, &rf);
    if (!entrance_seen && loc.entrance_found()) {
      entrance_seen = true;
      res.entrance_found = true;
      res.entrance_time = loc.entrance().time;
      res.entrance_truth_x = pose.transform(vcfg.profiler_offset).x() -
                             (loc.odo_cum() - loc.entrance().odo);
    }
    if (loc.nodes().size() > nodes_before) {
      loc.solve();
      const double truth_x = pose.transform(vcfg.detector_offset).x();
      const double drift = std::abs(loc.nodes().back().x - truth_x);
      res.max_drift = std::max(res.max_drift, drift);
      res.node_count = static_cast<int>(loc.nodes().size());
      if (after_turnaround && !res.had_reacquire &&
          loc.nodes().back().abs_count > 0) {
        res.had_reacquire = true;
        res.reacquire_drift = drift;
      }
    }

    ExecInputs in;
    in.time = t;
    in.safeguard = &sframe;
    in.loc_x = loc.live_x();
    in.loc_sigma = loc.live_sigma();
    in.entrance_found = loc.entrance_found();
    in.nodes = &loc.nodes();
    in.rf = rf;
    in.health = health;
    in.detector_silent = detector_silent;
    const DriveCommand cmd = exec.tick(in);

    if ((prev_state == MissionState::kForward ||
         prev_state == MissionState::kApproach) &&
        exec.state() == MissionState::kReverse) {
      after_turnaround = true;
      res.turnaround_truth_x = pose.x;
      res.turnaround_drift =
          std::abs(loc.live_x() - pose.transform(vcfg.detector_offset).x());
    }
    prev_state = exec.state();

    // Per-second gamma acquisition and health accumulation.
    if (have_ring) second_rings.push_back(ring);
    second_pitch_max = std::max(second_pitch_max, std::abs(imu.pitch));
    if (sframe.fit.ok()) {
      second_offtrack_max = std::max(second_offtrack_max,
                                     std::abs(sframe.pose_estimate.offset_y));
    }

    // Dynamics, then the encoders that measured the step.
    const StepResult step = step_dynamics(&pose, cmd, world, vcfg,
                                          scenario.noise, &dyn_rng);
    const EncoderSample enc = rig.encoders(step.distance, faults.encoder_scale);
    odo_delta_prev = 0.5 * (rig.ticks_to_meters(enc.left_ticks) +
                            rig.ticks_to_meters(enc.right_ticks));
    res.max_abs_pitch = std::max(res.max_abs_pitch, std::abs(pose.pitch));

    if ((tick + 1) % 50 == 0) {
      const double t_end = (tick + 1) * dt;
      const double x_det = pose.transform(vcfg.detector_offset).x();
      const double x_mid = 0.5 * (x_det_second_start + x_det);
      const Spectrum s = rig.gamma(x_mid, 1.0, scenario.deposit, faults.gain,
                                   faults.dead_detector);
      double gross = 0.0;
      for (const auto c : s.counts) gross += c;
      silent_run = gross == 0.0 ? silent_run + 1 : 0;
      detector_silent = silent_run >= 5;

      const double stamp = t_end - 0.5;
      const bool in_pass = exec.state() == MissionState::kForward ||
                           exec.state() == MissionState::kApproach ||
                           exec.state() == MissionState::kReverse;
      if (loc.entrance_found() && in_pass && stamp >= loc.entrance().time) {
        GammaSample gs;
        gs.stamp = stamp;
        gs.roi_counts = roi_counts(s, roi);
        gs.live_time = 1.0;
        gs.reverse = after_turnaround;
        gs.geometry_flag =
            flag_geometry(second_rings, scenario.pipe_radius()).round_pipe_broken;
        gs.pitch_flag = second_pitch_max > deg2rad(params.pitch_flag_deg);
        gs.offtrack_flag = second_offtrack_max > params.offtrack_flag_m;
        res.gamma_samples.push_back(gs);
      }
      second_rings.clear();
      second_pitch_max = 0.0;
      second_offtrack_max = 0.0;
      x_det_second_start = x_det;
    }

    const double power =
        (std::abs(cmd.speed) > 1e-6 ? params.drive_power_w : params.idle_power_w) *
        faults.battery_mult;
    battery = std::max(0.0, battery - power * dt / 3600.0);
    drain_ema_w += (power - drain_ema_w) * dt / 30.0;

    if (params.keep_tick_log && tick % 50 == 0) {
      TickLog log;
      log.time = t;
      log.state = exec.state();
      log.truth_x = pose.transform(vcfg.detector_offset).x();
      log.loc_x = loc.live_x();
      log.loc_sigma = loc.live_sigma();
      log.speed_cmd = cmd.speed;
      log.yaw = pose.yaw;
      log.pitch = pose.pitch;
      log.temp_c = temp;
      log.battery_wh = battery;
      res.tick_log.push_back(log);
    }

    res.ticks = tick + 1;
    res.sim_time = t + dt;
    if (exec.state() == MissionState::kFault || exec.finished()) break;
  }

  res.final_state = exec.state();
  res.abort_reason = exec.abort_reason();
  res.exit_code = res.final_state == MissionState::kFault ? 2
                  : exec.finished()                       ? 0
                                                          : 3;
  res.entrance_found = loc.entrance_found();
  res.reported_end = exec.reported_end();
  res.dock_range_error = exec.dock_range_error();
  res.dock_truth_error = std::abs(pose.x - deploy_body_x);
  res.gate_accept_rate = loc.gate_accept_rate();
  res.encoder_scale_bias = rig.encoder_scale_bias();
  res.node_count = static_cast<int>(loc.nodes().size());

  loc.solve();
  for (auto& gs : res.gamma_samples) {
    gs.x = loc.position_at(gs.stamp);
    gs.sigma_x = loc.sigma_at(gs.stamp);
  }
  res.feet_forward = per_foot_report(res.gamma_samples, rig.response(), false);
  res.feet_reverse = per_foot_report(res.gamma_samples, rig.response(), true);
  res.events = exec.events();
  return res;
}

}  // namespace pipecrawl
