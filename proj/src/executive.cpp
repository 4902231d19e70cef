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

#include "pipecrawl/executive.hpp"

#include <algorithm>
#include <cmath>

namespace pipecrawl {

namespace {

// Detector sits 5 cm ahead of the mapper; localization tracks the detector.
constexpr double kMapperFromDetector = 0.05;

}  // namespace

const char* to_string(MissionState s) {
  switch (s) {
    case MissionState::kIdle: return "idle";
    case MissionState::kQcPre: return "qc_pre";
    case MissionState::kForward: return "forward";
    case MissionState::kApproach: return "approach";
    case MissionState::kReverse: return "reverse";
    case MissionState::kDock: return "dock";
    case MissionState::kQcPost: return "qc_post";
    case MissionState::kFault: return "fault";
  }
  return "?";
}

const char* to_string(AbortReason r) {
  switch (r) {
    case AbortReason::kNone: return "none";
    case AbortReason::kObstacle: return "obstacle";
    case AbortReason::kLaserShort: return "laser_short";
    case AbortReason::kLaserLong: return "laser_long";
    case AbortReason::kPitch: return "pitch";
    case AbortReason::kOverTemp: return "over_temp";
    case AbortReason::kHeartbeat: return "heartbeat";
    case AbortReason::kDiskLow: return "disk_low";
    case AbortReason::kBattery: return "battery";
    case AbortReason::kOdometryDisagree: return "odometry_disagree";
    case AbortReason::kDetectorSilent: return "detector_silent";
  }
  return "?";
}

Executive::Executive(const ExecParams& params, const VehicleConfig& vehicle)
    : params_(params), vehicle_(vehicle) {}

void Executive::change_state(MissionState next, double time, double x,
                             const std::string& code) {
  state_ = next;
  events_.push_back({time, next, code, x});
}

void Executive::abort(AbortReason reason, const ExecInputs& in) {
  if (abort_reason_ != AbortReason::kNone) return;
  abort_reason_ = reason;
  if (!in.entrance_found) {
    change_state(MissionState::kFault, in.time, in.loc_x, to_string(reason));
  } else {
    change_state(MissionState::kReverse, in.time, in.loc_x, to_string(reason));
  }
}

bool Executive::lasers_masked(const ExecInputs& in) const {
  // Near a confirmed end the infinite-cylinder range prediction behind the
  // plausibility check no longer holds (the beams cross the face or shoot
  // past an open lip), so the standoff controller owns termination there.
  return reported_end_.valid && control_end_x_ - in.loc_x <= params_.laser_mask_range;
}

bool Executive::safety_aborts(const ExecInputs& in) {
  const SafeguardFrame& sg = *in.safeguard;
  if (sg.pitch_fault) {
    abort(AbortReason::kPitch, in);
  } else if (sg.obstacle.blocked) {
    abort(AbortReason::kObstacle, in);
  } else if (sg.laser_short_debounced && !lasers_masked(in)) {
    abort(AbortReason::kLaserShort, in);
  } else if (sg.laser_long_debounced && !lasers_masked(in)) {
    abort(AbortReason::kLaserLong, in);
  } else if (in.health.temp_c >= params_.temp_fault_c) {
    abort(AbortReason::kOverTemp, in);
  } else if (in.health.heartbeat_age > params_.heartbeat_max) {
    abort(AbortReason::kHeartbeat, in);
  } else if (in.health.disk_free_frac < params_.disk_min_frac) {
    abort(AbortReason::kDiskLow, in);
  } else if (in.health.battery_wh < in.health.battery_reserve_wh) {
    abort(AbortReason::kBattery, in);
  } else if (in.detector_silent) {
    abort(AbortReason::kDetectorSilent, in);
  } else if (cross_streak_ >= params_.cross_check_pairs) {
    abort(AbortReason::kOdometryDisagree, in);
  }

  if (!temp_warn_ && in.health.temp_c >= params_.temp_warn_c) {
    temp_warn_ = true;
    events_.push_back({in.time, state_, "temp_warning", in.loc_x});
  }
  return abort_reason_ != AbortReason::kNone;
}

void Executive::update_cross_check(const ExecInputs& in) {
  if (in.nodes == nullptr) return;
  const auto& nodes = *in.nodes;
  for (; cross_nodes_seen_ < nodes.size(); ++cross_nodes_seen_) {
    const LocNode& nd = nodes[cross_nodes_seen_];
    if (nd.abs_count == 0) {
      prev_pair_valid_ = false;
      continue;
    }
    if (prev_pair_valid_) {
      const double d_abs = nd.abs_meas - prev_abs_;
      const double d_odo = nd.odo - prev_odo_;
      const double rel =
          std::abs(d_odo - d_abs) / std::max(std::abs(d_abs), 0.02);
      cross_streak_ = rel > params_.cross_check_rel ? cross_streak_ + 1 : 0;
    }
    prev_abs_ = nd.abs_meas;
    prev_odo_ = nd.odo;
    prev_pair_valid_ = true;
  }
}

void Executive::update_end_confirmation(const ExecInputs& in) {
  const SafeguardFrame& sg = *in.safeguard;
  if (sg.end.kind == EndKind::kNone || !sg.fit.ok()) {
    end_run_ = std::max(0, end_run_ - 1);
    return;
  }
  const double end_world = in.loc_x - kMapperFromDetector + sg.end.x;
  if (end_run_ > 0 && sg.end.kind == end_last_kind_ &&
      std::abs(end_world - end_last_x_) <= params_.confirm_agree) {
    ++end_run_;
  } else {
    end_run_ = 1;
  }
  end_last_kind_ = sg.end.kind;
  end_last_x_ = end_world;

  if (end_run_ >= params_.confirm_frames) {
    if (!reported_end_.valid) {
      reported_end_ = {sg.end.kind, end_world, in.time, true};
      control_end_x_ = end_world;
    } else {
      control_end_x_ = 0.8 * control_end_x_ + 0.2 * end_world;
    }
  }
}

DriveCommand Executive::steer(const ExecInputs& in, double speed) const {
  const SafeguardFrame& sg = *in.safeguard;
  DriveCommand cmd;
  cmd.speed = speed;
  if (sg.fit.ok() && !sg.fit_stale) {
    const double dir = speed < 0.0 ? -1.0 : 1.0;
    cmd.yaw_rate = steer_controller(sg.pose_estimate.yaw,
                                    dir * sg.pose_estimate.offset_y, vehicle_);
  }
  return cmd;
}

DriveCommand Executive::tick(const ExecInputs& in) {
  DriveCommand stop;
  switch (state_) {
    case MissionState::kIdle:
      change_state(MissionState::kQcPre, in.time, in.loc_x, "start");
      return stop;

    case MissionState::kQcPre:
      dock_ref_sum_ += in.rf.range;
      ++dock_ref_count_;
      return stop;

    case MissionState::kForward: {
      update_cross_check(in);
      update_end_confirmation(in);
      if (safety_aborts(in)) return stop;
      if (reported_end_.valid) {
        change_state(MissionState::kApproach, in.time, in.loc_x,
                     std::string("end_confirmed:") + to_string(reported_end_.kind));
        return steer(in, params_.cruise_speed * params_.approach_speed_frac);
      }
      if (in.loc_x >= params_.commanded_distance) {
        change_state(MissionState::kReverse, in.time, in.loc_x,
                     "commanded_reached");
        return stop;
      }
      return steer(in, params_.cruise_speed);
    }

    case MissionState::kApproach: {
      update_cross_check(in);
      update_end_confirmation(in);
      if (safety_aborts(in)) return stop;
      const double mapper_x = in.loc_x - kMapperFromDetector;
      if (control_end_x_ - mapper_x <= params_.standoff) {
        change_state(MissionState::kReverse, in.time, in.loc_x,
                     "standoff_reached");
        return stop;
      }
      if (in.loc_x >= params_.commanded_distance) {
        change_state(MissionState::kReverse, in.time, in.loc_x,
                     "commanded_reached");
        return stop;
      }
      return steer(in, params_.cruise_speed * params_.approach_speed_frac);
    }

    case MissionState::kReverse: {
      dock_ranges_.push_back(in.rf.range);
      if (dock_ranges_.size() > 5) dock_ranges_.pop_front();
      const bool near_home = !in.entrance_found || in.loc_x < 3.0;
      if (near_home && dock_ranges_.size() == 5) {
        double mean = 0.0;
        for (const double r : dock_ranges_) mean += r;
        mean /= 5.0;
        if (mean <= dock_ref_ + params_.dock_window) {
          change_state(MissionState::kDock, in.time, in.loc_x, "dock_window");
          return steer(in, -params_.cruise_speed * params_.dock_speed_frac);
        }
      }
      return steer(in, -params_.cruise_speed);
    }

    case MissionState::kDock: {
      dock_ranges_.push_back(in.rf.range);
      if (dock_ranges_.size() > 5) dock_ranges_.pop_front();
      double mean = 0.0;
      for (const double r : dock_ranges_) mean += r;
      mean /= static_cast<double>(dock_ranges_.size());
      if (mean <= dock_ref_ + params_.dock_lag) {
        dock_error_ = mean - dock_ref_;
        change_state(MissionState::kQcPost, in.time, in.loc_x, "docked");
        return stop;
      }
      return steer(in, -params_.cruise_speed * params_.dock_speed_frac);
    }

    case MissionState::kQcPost:
    case MissionState::kFault:
      return stop;
  }
  return stop;
}

void Executive::complete_qc(bool pass, double time) {
  if (state_ == MissionState::kQcPre) {
    dock_ref_ =
        dock_ref_count_ > 0 ? dock_ref_sum_ / dock_ref_count_ : 0.0;
    if (pass) {
      change_state(MissionState::kForward, time, 0.0, "qc_pre_pass");
    } else {
      change_state(MissionState::kFault, time, 0.0, "qc_pre_fail");
    }
  } else if (state_ == MissionState::kQcPost) {
    finished_ = true;
    events_.push_back({time, state_, pass ? "qc_post_pass" : "qc_post_fail", 0.0});
  }
  qc_done_ = true;
  qc_pass_ = pass;
}

}  // namespace pipecrawl
