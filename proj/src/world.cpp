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

#include "pipecrawl/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pipecrawl/json_util.hpp"
#include "pipecrawl/rng.hpp"

namespace pipecrawl {

using json = nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

// Smallest root of a*t^2 + b*t + c = 0 greater than tmin; NaN if none.
// Also reports the other root through t2.
inline double quad_roots(double a, double b, double c, double* r0, double* r1) {
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0 || std::abs(a) < 1e-300) {
    *r0 = *r1 = std::numeric_limits<double>::quiet_NaN();
    return disc;
  }
  const double sq = std::sqrt(disc);
  // Numerically stable split.
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double t0 = q / a;
  double t1 = (q != 0.0) ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  *r0 = t0;
  *r1 = t1;
  return disc;
}

}  // namespace

double nominal_radius(DiameterClass c) {
  return c == DiameterClass::kD30 ? 0.381 : 0.5334;
}

double nominal_speed(DiameterClass c) {
  // 10 ft/min for the 30 inch class, 6 ft/min for the 42 inch class.
  return c == DiameterClass::kD30 ? 0.0508 : 0.03048;
}

const char* to_string(DiameterClass c) {
  return c == DiameterClass::kD30 ? "D30" : "D42";
}

const char* to_string(Fitting::Kind k) {
  switch (k) {
    case Fitting::Kind::kReducer: return "reducer";
    case Fitting::Kind::kSweptT: return "swept_t";
    case Fitting::Kind::kClosedValve: return "closed_valve";
    case Fitting::Kind::kOpenEnd: return "open_end";
    case Fitting::Kind::kObstacle: return "obstacle";
    case Fitting::Kind::kHole: return "hole";
    case Fitting::Kind::kPort: return "port";
  }
  return "?";
}

const char* to_string(FaultInjection::Kind k) {
  switch (k) {
    case FaultInjection::Kind::kGainShift: return "gain_shift";
    case FaultInjection::Kind::kDeadDetector: return "dead_detector";
    case FaultInjection::Kind::kEncoderScale: return "encoder_scale";
    case FaultInjection::Kind::kTempRunaway: return "temp_runaway";
    case FaultInjection::Kind::kDiskLow: return "disk_low";
    case FaultInjection::Kind::kNodeHang: return "node_hang";
    case FaultInjection::Kind::kBatteryDrain: return "battery_drain";
    case FaultInjection::Kind::kContamination: return "contamination";
  }
  return "?";
}

double Fitting::span_begin() const { return position; }

double Fitting::span_end() const {
  switch (kind) {
    case Kind::kReducer: return position + World::kTaperLength;
    case Kind::kSweptT: return position + World::kSweptAxial + branch_radius;
    case Kind::kClosedValve: return position + World::kValveThickness;
    case Kind::kOpenEnd: return position;
    case Kind::kObstacle: return position + length;
    case Kind::kHole: return position + axial_extent;
    case Kind::kPort: return position + 2.0 * radius;
  }
  return position;
}

double DepositProfile::line_activity(double x) const {
  if (breakpoints.empty()) return 0.0;
  if (x <= breakpoints.front().first || x >= breakpoints.back().first) {
    // Outside the declared span the deposit is zero unless the profile is a
    // single constant level.
    if (breakpoints.size() == 1) return breakpoints.front().second;
    if (x <= breakpoints.front().first)
      return x == breakpoints.front().first ? breakpoints.front().second : 0.0;
    return x == breakpoints.back().first ? breakpoints.back().second : 0.0;
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (x <= breakpoints[i].first) {
      const auto& [x0, a0] = breakpoints[i - 1];
      const auto& [x1, a1] = breakpoints[i];
      return x1 > x0 ? a0 + (a1 - a0) * (x - x0) / (x1 - x0) : a1;
    }
  }
  return breakpoints.back().second;
}

// ---------------------------------------------------------------------------
// Scenario document handling.

namespace {

class FieldCursor {
 public:
  explicit FieldCursor(std::string path) : path_(std::move(path)) {}
  const std::string& path() const { return path_; }
  FieldCursor sub(const std::string& key) const { return FieldCursor(path_ + "." + key); }
  FieldCursor idx(std::size_t i) const {
    return FieldCursor(path_ + "[" + std::to_string(i) + "]");
  }

 private:
  std::string path_;
};

[[noreturn]] void fail(const FieldCursor& at, const std::string& msg) {
  throw ScenarioError(at.path() + ": " + msg);
}

double get_num(const json& j, const FieldCursor& at, const char* key,
               bool required = true, double fallback = 0.0) {
  if (!j.contains(key)) {
    if (required) fail(at.sub(key), "missing required field");
    return fallback;
  }
  const auto& v = j.at(key);
  if (!v.is_number()) fail(at.sub(key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(at.sub(key), "must be finite");
  return d;
}

std::string get_str(const json& j, const FieldCursor& at, const char* key) {
  if (!j.contains(key)) fail(at.sub(key), "missing required field");
  if (!j.at(key).is_string()) fail(at.sub(key), "expected a string");
  return j.at(key).get<std::string>();
}

Fitting::Kind parse_fitting_kind(const std::string& s, const FieldCursor& at) {
  if (s == "reducer") return Fitting::Kind::kReducer;
  if (s == "swept_t") return Fitting::Kind::kSweptT;
  if (s == "closed_valve") return Fitting::Kind::kClosedValve;
  if (s == "open_end") return Fitting::Kind::kOpenEnd;
  if (s == "obstacle") return Fitting::Kind::kObstacle;
  if (s == "hole") return Fitting::Kind::kHole;
  if (s == "port") return Fitting::Kind::kPort;
  fail(at, "unknown fitting kind '" + s + "'");
}

FaultInjection::Kind parse_fault_kind(const std::string& s, const FieldCursor& at) {
  if (s == "gain_shift") return FaultInjection::Kind::kGainShift;
  if (s == "dead_detector") return FaultInjection::Kind::kDeadDetector;
  if (s == "encoder_scale") return FaultInjection::Kind::kEncoderScale;
  if (s == "temp_runaway") return FaultInjection::Kind::kTempRunaway;
  if (s == "disk_low") return FaultInjection::Kind::kDiskLow;
  if (s == "node_hang") return FaultInjection::Kind::kNodeHang;
  if (s == "battery_drain") return FaultInjection::Kind::kBatteryDrain;
  if (s == "contamination") return FaultInjection::Kind::kContamination;
  fail(at, "unknown fault kind '" + s + "'");
}

void apply_noise_overrides(const json& j, const FieldCursor& at, NoiseConfig* n) {
  struct Entry {
    const char* key;
    double* slot;
  };
  const Entry entries[] = {
      {"mapper_sigma", &n->mapper_sigma},
      {"mapper_outlier_rate", &n->mapper_outlier_rate},
      {"mapper_conf_range", &n->mapper_conf_range},
      {"mapper_conf_jitter", &n->mapper_conf_jitter},
      {"mapper_conf_threshold", &n->mapper_conf_threshold},
      {"laser_sigma", &n->laser_sigma},
      {"profiler_sigma", &n->profiler_sigma},
      {"profiler_dropout", &n->profiler_dropout},
      {"imu_angle_sigma_deg", &n->imu_angle_sigma_deg},
      {"imu_bias_sigma_deg", &n->imu_bias_sigma_deg},
      {"rangefinder_sigma", &n->rangefinder_sigma},
      {"rangefinder_lock_range", &n->rangefinder_lock_range},
      {"rangefinder_decay_tau", &n->rangefinder_decay_tau},
      {"rangefinder_dropout_beyond", &n->rangefinder_dropout_beyond},
      {"rangefinder_wild_min", &n->rangefinder_wild_min},
      {"encoder_ticks_per_m", &n->encoder_ticks_per_m},
      {"encoder_white_sigma", &n->encoder_white_sigma},
      {"encoder_scale_bias_sigma", &n->encoder_scale_bias_sigma},
      {"slip_sigma", &n->slip_sigma},
      {"gamma_efficiency", &n->gamma_efficiency},
      {"gamma_fwhm_frac", &n->gamma_fwhm_frac},
      {"cal_kev_per_channel", &n->cal_kev_per_channel},
      {"am241_energy_kev", &n->am241_energy_kev},
      {"am241_rate_cps", &n->am241_rate_cps},
      {"am241_fwhm_frac", &n->am241_fwhm_frac},
      {"qc_live_time", &n->qc_live_time},
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "spectrum_channels") {
      if (!it.value().is_number_integer() || it.value().get<int>() < 64)
        fail(at.sub("spectrum_channels"), "expected an integer >= 64");
      n->spectrum_channels = it.value().get<int>();
      continue;
    }
    bool known = false;
    for (const auto& e : entries) {
      if (it.key() == e.key) {
        if (!it.value().is_number()) fail(at.sub(e.key), "expected a number");
        *e.slot = it.value().get<double>();
        known = true;
        break;
      }
    }
    if (!known) fail(at.sub(it.key()), "unknown noise field");
  }
  if (n->mapper_conf_threshold < 0.0 || n->mapper_conf_threshold > 1.0)
    fail(at.sub("mapper_conf_threshold"), "must be in [0, 1]");
  if (n->encoder_ticks_per_m <= 0.0)
    fail(at.sub("encoder_ticks_per_m"), "must be positive");
}

void validate_fittings(const Scenario& s) {
  const FieldCursor root("fittings");
  const double R = s.pipe_radius();
  double prev_end = -1.0;
  bool saw_terminal = false;
  for (std::size_t i = 0; i < s.fittings.size(); ++i) {
    const Fitting& f = s.fittings[i];
    const FieldCursor at = root.idx(i);
    if (f.position < 0.0 || f.position > s.pipe_length)
      fail(at.sub("position"), "outside [0, pipe_length]");
    if (f.span_end() > s.pipe_length + 1e-9)
      fail(at.sub("position"), "fitting extends past pipe_length");
    if (f.span_begin() < prev_end - 1e-9)
      fail(at.sub("position"), "fittings must be sorted and non-overlapping");
    if (saw_terminal)
      fail(at.sub("position"), "no fitting may follow a closed_valve/open_end/reducer");
    prev_end = f.span_end();
    switch (f.kind) {
      case Fitting::Kind::kReducer:
        if (f.exit_radius <= 0.05 || f.exit_radius >= R)
          fail(at.sub("exit_radius"), "must be in (0.05, pipe radius)");
        saw_terminal = true;
        break;
      case Fitting::Kind::kSweptT:
        if (f.branch_radius < 0.03 || f.branch_radius > 0.5 * R)
          fail(at.sub("branch_radius"), "must be in [0.03, half the pipe radius]");
        saw_terminal = true;
        break;
      case Fitting::Kind::kClosedValve:
      case Fitting::Kind::kOpenEnd:
        saw_terminal = true;
        break;
      case Fitting::Kind::kObstacle:
        if (f.height <= 0.0 || f.height > 0.5 * R)
          fail(at.sub("height"), "must be in (0, half the pipe radius]");
        if (f.length <= 0.0) fail(at.sub("length"), "must be positive");
        break;
      case Fitting::Kind::kHole:
        if (f.axial_extent <= 0.0) fail(at.sub("axial_extent"), "must be positive");
        if (f.angular_extent_deg <= 0.0 || f.angular_extent_deg > 180.0)
          fail(at.sub("angular_extent_deg"), "must be in (0, 180]");
        break;
      case Fitting::Kind::kPort:
        if (f.radius <= 0.0 || f.radius > 0.5 * R)
          fail(at.sub("radius"), "must be in (0, half the pipe radius]");
        break;
    }
  }
}

}  // namespace

Scenario load_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ScenarioError("scenario: top level must be an object");

  const FieldCursor root("scenario");
  Scenario s;

  static const char* known_keys[] = {
      "name", "diameter_class", "pipe_length", "commanded_distance", "seed",
      "entrance", "fittings", "deposit", "noise", "faults"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(std::begin(known_keys), std::end(known_keys),
                     [&](const char* k) { return it.key() == k; }) ==
        std::end(known_keys))
      fail(root.sub(it.key()), "unknown field");
  }

  if (j.contains("name")) s.name = get_str(j, root, "name");

  const std::string cls = get_str(j, root, "diameter_class");
  if (cls == "D30") s.diameter_class = DiameterClass::kD30;
  else if (cls == "D42") s.diameter_class = DiameterClass::kD42;
  else fail(root.sub("diameter_class"), "must be \"D30\" or \"D42\"");

  s.pipe_length = get_num(j, root, "pipe_length");
  if (s.pipe_length <= 1.0 || s.pipe_length > 200.0)
    fail(root.sub("pipe_length"), "must be in (1, 200] m");
  s.commanded_distance = get_num(j, root, "commanded_distance");
  if (s.commanded_distance <= 0.0 || s.commanded_distance > s.pipe_length)
    fail(root.sub("commanded_distance"), "must be in (0, pipe_length]");

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      fail(root.sub("seed"), "expected an unsigned integer");
    s.seed = j.at("seed").get<std::uint64_t>();
  }

  if (j.contains("entrance")) {
    const json& e = j.at("entrance");
    const FieldCursor at = root.sub("entrance");
    if (!e.is_object()) fail(at, "expected an object");
    s.entrance.dz = get_num(e, at, "dz", false, 0.0);
    s.entrance.dy = get_num(e, at, "dy", false, 0.0);
    s.entrance.yaw_deg = get_num(e, at, "yaw_deg", false, 0.0);
    s.entrance.setback = get_num(e, at, "setback", false, 0.0);
    s.entrance.step = get_num(e, at, "step", false, 0.0);
    s.entrance.gap = get_num(e, at, "gap", false, 0.0);
    for (const char* k : {"setback", "step", "gap"}) {
      if (get_num(e, at, k, false, 0.0) < 0.0) fail(at.sub(k), "must be >= 0");
    }
  }

  if (j.contains("fittings")) {
    const json& arr = j.at("fittings");
    const FieldCursor at = root.sub("fittings");
    if (!arr.is_array()) fail(at, "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& fj = arr[i];
      const FieldCursor fat = at.idx(i);
      if (!fj.is_object()) fail(fat, "expected an object");
      Fitting f;
      f.kind = parse_fitting_kind(get_str(fj, fat, "kind"), fat.sub("kind"));
      f.position = get_num(fj, fat, "position");
      switch (f.kind) {
        case Fitting::Kind::kReducer:
          f.exit_radius = get_num(fj, fat, "exit_radius");
          break;
        case Fitting::Kind::kSweptT:
          f.branch_radius = get_num(fj, fat, "branch_radius");
          f.clock_angle_deg = get_num(fj, fat, "clock_angle_deg");
          break;
        case Fitting::Kind::kObstacle:
          f.height = get_num(fj, fat, "height");
          f.length = get_num(fj, fat, "length");
          f.clock_angle_deg = get_num(fj, fat, "clock_angle_deg");
          break;
        case Fitting::Kind::kHole:
          f.axial_extent = get_num(fj, fat, "axial_extent");
          f.angular_extent_deg = get_num(fj, fat, "angular_extent_deg");
          f.clock_angle_deg = get_num(fj, fat, "clock_angle_deg");
          break;
        case Fitting::Kind::kPort:
          f.radius = get_num(fj, fat, "radius");
          f.clock_angle_deg = get_num(fj, fat, "clock_angle_deg");
          break;
        case Fitting::Kind::kClosedValve:
        case Fitting::Kind::kOpenEnd:
          break;
      }
      s.fittings.push_back(f);
    }
  }
  validate_fittings(s);

  if (j.contains("deposit")) {
    const json& d = j.at("deposit");
    const FieldCursor at = root.sub("deposit");
    if (!d.is_object()) fail(at, "expected an object");
    s.deposit.background_rate = get_num(d, at, "background_rate", false, 10.0);
    if (s.deposit.background_rate < 0.0)
      fail(at.sub("background_rate"), "must be >= 0");
    if (d.contains("breakpoints")) {
      const json& bp = d.at("breakpoints");
      if (!bp.is_array()) fail(at.sub("breakpoints"), "expected an array");
      double prev_x = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < bp.size(); ++i) {
        const json& p = bp[i];
        const FieldCursor pat = at.sub("breakpoints").idx(i);
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          fail(pat, "expected [x, activity]");
        const double x = p[0].get<double>(), a = p[1].get<double>();
        if (x <= prev_x) fail(pat, "breakpoints must be strictly increasing in x");
        if (a < 0.0) fail(pat, "activity must be >= 0");
        prev_x = x;
        s.deposit.breakpoints.emplace_back(x, a);
      }
    }
  }

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    const FieldCursor at = root.sub("noise");
    if (!n.is_object()) fail(at, "expected an object");
    apply_noise_overrides(n, at, &s.noise);
  }

  if (j.contains("faults")) {
    const json& arr = j.at("faults");
    const FieldCursor at = root.sub("faults");
    if (!arr.is_array()) fail(at, "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& fj = arr[i];
      const FieldCursor fat = at.idx(i);
      if (!fj.is_object()) fail(fat, "expected an object");
      FaultInjection f;
      f.kind = parse_fault_kind(get_str(fj, fat, "kind"), fat.sub("kind"));
      f.time = get_num(fj, fat, "time");
      if (f.time < 0.0) fail(fat.sub("time"), "must be >= 0");
      f.factor = get_num(fj, fat, "factor", false, 1.0);
      if (f.factor <= 0.0) fail(fat.sub("factor"), "must be > 0");
      s.faults.push_back(f);
    }
  }

  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("scenario: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  if (!s.name.empty()) j["name"] = s.name;
  j["diameter_class"] = to_string(s.diameter_class);
  j["pipe_length"] = round_sig9(s.pipe_length);
  j["commanded_distance"] = round_sig9(s.commanded_distance);
  j["seed"] = s.seed;
  j["entrance"] = {{"dz", round_sig9(s.entrance.dz)},
                   {"dy", round_sig9(s.entrance.dy)},
                   {"yaw_deg", round_sig9(s.entrance.yaw_deg)},
                   {"setback", round_sig9(s.entrance.setback)},
                   {"step", round_sig9(s.entrance.step)},
                   {"gap", round_sig9(s.entrance.gap)}};
  j["fittings"] = json::array();
  for (const Fitting& f : s.fittings) {
    json fj;
    fj["kind"] = to_string(f.kind);
    fj["position"] = round_sig9(f.position);
    switch (f.kind) {
      case Fitting::Kind::kReducer:
        fj["exit_radius"] = round_sig9(f.exit_radius);
        break;
      case Fitting::Kind::kSweptT:
        fj["branch_radius"] = round_sig9(f.branch_radius);
        fj["clock_angle_deg"] = round_sig9(f.clock_angle_deg);
        break;
      case Fitting::Kind::kObstacle:
        fj["height"] = round_sig9(f.height);
        fj["length"] = round_sig9(f.length);
        fj["clock_angle_deg"] = round_sig9(f.clock_angle_deg);
        break;
      case Fitting::Kind::kHole:
        fj["axial_extent"] = round_sig9(f.axial_extent);
        fj["angular_extent_deg"] = round_sig9(f.angular_extent_deg);
        fj["clock_angle_deg"] = round_sig9(f.clock_angle_deg);
        break;
      case Fitting::Kind::kPort:
        fj["radius"] = round_sig9(f.radius);
        fj["clock_angle_deg"] = round_sig9(f.clock_angle_deg);
        break;
      default:
        break;
    }
    j["fittings"].push_back(fj);
  }
  json bp = json::array();
  for (const auto& [x, a] : s.deposit.breakpoints)
    bp.push_back({round_sig9(x), round_sig9(a)});
  j["deposit"] = {{"breakpoints", bp},
                  {"background_rate", round_sig9(s.deposit.background_rate)}};
  json nj;
  const NoiseConfig def;
  const NoiseConfig& n = s.noise;
  auto put_if = [&](const char* key, double v, double d) {
    if (v != d) nj[key] = round_sig9(v);
  };
  put_if("mapper_sigma", n.mapper_sigma, def.mapper_sigma);
  put_if("mapper_outlier_rate", n.mapper_outlier_rate, def.mapper_outlier_rate);
  put_if("mapper_conf_range", n.mapper_conf_range, def.mapper_conf_range);
  put_if("mapper_conf_jitter", n.mapper_conf_jitter, def.mapper_conf_jitter);
  put_if("mapper_conf_threshold", n.mapper_conf_threshold, def.mapper_conf_threshold);
  put_if("laser_sigma", n.laser_sigma, def.laser_sigma);
  put_if("profiler_sigma", n.profiler_sigma, def.profiler_sigma);
  put_if("profiler_dropout", n.profiler_dropout, def.profiler_dropout);
  put_if("imu_angle_sigma_deg", n.imu_angle_sigma_deg, def.imu_angle_sigma_deg);
  put_if("imu_bias_sigma_deg", n.imu_bias_sigma_deg, def.imu_bias_sigma_deg);
  put_if("rangefinder_sigma", n.rangefinder_sigma, def.rangefinder_sigma);
  put_if("rangefinder_lock_range", n.rangefinder_lock_range, def.rangefinder_lock_range);
  put_if("rangefinder_decay_tau", n.rangefinder_decay_tau, def.rangefinder_decay_tau);
  put_if("rangefinder_dropout_beyond", n.rangefinder_dropout_beyond,
         def.rangefinder_dropout_beyond);
  put_if("rangefinder_wild_min", n.rangefinder_wild_min, def.rangefinder_wild_min);
  put_if("encoder_ticks_per_m", n.encoder_ticks_per_m, def.encoder_ticks_per_m);
  put_if("encoder_white_sigma", n.encoder_white_sigma, def.encoder_white_sigma);
  put_if("encoder_scale_bias_sigma", n.encoder_scale_bias_sigma,
         def.encoder_scale_bias_sigma);
  put_if("slip_sigma", n.slip_sigma, def.slip_sigma);
  put_if("gamma_efficiency", n.gamma_efficiency, def.gamma_efficiency);
  put_if("gamma_fwhm_frac", n.gamma_fwhm_frac, def.gamma_fwhm_frac);
  put_if("cal_kev_per_channel", n.cal_kev_per_channel, def.cal_kev_per_channel);
  put_if("am241_energy_kev", n.am241_energy_kev, def.am241_energy_kev);
  put_if("am241_rate_cps", n.am241_rate_cps, def.am241_rate_cps);
  put_if("am241_fwhm_frac", n.am241_fwhm_frac, def.am241_fwhm_frac);
  put_if("qc_live_time", n.qc_live_time, def.qc_live_time);
  if (n.spectrum_channels != def.spectrum_channels)
    nj["spectrum_channels"] = n.spectrum_channels;
  if (!nj.empty()) j["noise"] = nj;
  if (!s.faults.empty()) {
    json fa = json::array();
    for (const FaultInjection& f : s.faults)
      fa.push_back({{"kind", to_string(f.kind)},
                    {"time", round_sig9(f.time)},
                    {"factor", round_sig9(f.factor)}});
    j["faults"] = fa;
  }
  return j.dump(2) + "\n";
}

std::string digest_hex(const std::string& bytes) {
  const std::uint64_t h = fnv1a64(bytes);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Geometry compilation and ray casting.

World::World(const Scenario& scenario) : scenario_(scenario) {
  radius_ = scenario_.pipe_radius();
  open_x_ = scenario_.pipe_length;
  for (const Fitting& f : scenario_.fittings) {
    if (f.kind == Fitting::Kind::kOpenEnd) open_x_ = std::min(open_x_, f.position);
  }

  // Radius profile, reducers applied in order.
  double cur_r = radius_;
  double cur_x = 0.0;
  for (const Fitting& f : scenario_.fittings) {
    if (f.kind != Fitting::Kind::kReducer) continue;
    if (f.position > cur_x)
      segments_.push_back({cur_x, f.position, cur_r, cur_r});
    const double taper_end = std::min(f.position + kTaperLength, open_x_);
    segments_.push_back({f.position, taper_end, cur_r, f.exit_radius});
    cur_r = f.exit_radius;
    cur_x = taper_end;
  }
  if (cur_x < open_x_) segments_.push_back({cur_x, open_x_, cur_r, cur_r});

  auto radius_of = [&](double x) {
    for (const auto& seg : segments_)
      if (x >= seg.x0 - 1e-12 && x <= seg.x1 + 1e-12) return seg.radius_at(x);
    return cur_r;
  };

  for (std::size_t i = 0; i < scenario_.fittings.size(); ++i) {
    const Fitting& f = scenario_.fittings[i];
    const int fi = static_cast<int>(i);
    const double ang = deg2rad(f.clock_angle_deg);
    switch (f.kind) {
      case Fitting::Kind::kClosedValve:
        discs_.push_back({f.position, radius_of(f.position), fi});
        break;
      case Fitting::Kind::kObstacle: {
        const double r_wall = radius_of(f.position);
        prisms_.push_back({f.position, f.position + f.length, ang,
                           deg2rad(kObstacleHalfAngleDeg), r_wall,
                           r_wall - f.height, fi});
        break;
      }
      case Fitting::Kind::kHole: {
        const double r_wall = radius_of(f.position + 0.5 * f.axial_extent);
        apertures_.push_back({f.position, f.position + f.axial_extent, ang,
                              0.5 * deg2rad(f.angular_extent_deg), false, 0.0,
                              r_wall, fi});
        break;
      }
      case Fitting::Kind::kPort: {
        const double xc = f.position + f.radius;
        const double r_wall = radius_of(xc);
        apertures_.push_back({f.position, f.position + 2.0 * f.radius, ang,
                              f.radius / r_wall, true, f.radius, r_wall, fi});
        const Eigen::Vector3d rdir(0.0, std::sin(ang), std::cos(ang));
        stubs_.push_back({Eigen::Vector3d(xc, r_wall * rdir.y(), r_wall * rdir.z()),
                          rdir, f.radius, kPortDepth, fi});
        break;
      }
      case Fitting::Kind::kSweptT: {
        const double r_wall = radius_of(f.position);
        const Eigen::Vector3d rdir(0.0, std::sin(ang), std::cos(ang));
        const Eigen::Vector3d a(f.position, r_wall * rdir.y(), r_wall * rdir.z());
        const Eigen::Vector3d b = a + Eigen::Vector3d(kSweptAxial, 0.0, 0.0) -
                                  kSweptRadial * rdir;
        capsules_.push_back({a, b, f.branch_radius, fi});
        break;
      }
      default:
        break;
    }
  }
}

bool World::in_aperture(double x, double ang, const Aperture& ap) const {
  if (x < ap.x0 - 1e-12 || x > ap.x1 + 1e-12) return false;
  const double da = wrap_angle(ang - ap.ang_c);
  if (ap.circular) {
    const double xc = 0.5 * (ap.x0 + ap.x1);
    const double arc = ap.wall_r * da;
    return (x - xc) * (x - xc) + arc * arc <= ap.radius * ap.radius;
  }
  return std::abs(da) <= ap.ang_half;
}

const World::Aperture* World::find_aperture(double x, double ang) const {
  for (const Aperture& ap : apertures_)
    if (in_aperture(x, ang, ap)) return &ap;
  return nullptr;
}

RayHit World::cast_ray(const Eigen::Vector3d& o, const Eigen::Vector3d& d) const {
  constexpr double kTMin = 1e-9;
  RayHit best;
  best.range = kRangeClamp;
  best.surface = RayHit::Surface::kNone;

  double wall_block_t = kRangeClamp;  // first opaque wall interaction

  // Wall surfaces (inner and outer) across the radius profile. The first
  // crossing that does not land in an aperture is opaque.
  struct WallCross {
    double t;
    bool inner;
  };
  WallCross crossings[32];
  int n_cross = 0;
  for (const RadiusSegment& seg : segments_) {
    const double s = (seg.r1 - seg.r0) / std::max(seg.x1 - seg.x0, 1e-12);
    for (int surf = 0; surf < 2; ++surf) {
      const double r_base = (surf == 0) ? seg.r0 : seg.r0 + kWallThickness;
      const double A = r_base + s * (o.x() - seg.x0);
      const double B = s * d.x();
      const double qa = d.y() * d.y() + d.z() * d.z() - B * B;
      const double qb = 2.0 * (o.y() * d.y() + o.z() * d.z() - A * B);
      const double qc = o.y() * o.y() + o.z() * o.z() - A * A;
      double t0, t1;
      quad_roots(qa, qb, qc, &t0, &t1);
      for (double t : {t0, t1}) {
        if (!(t > kTMin) || t >= kRangeClamp) continue;
        const double x = o.x() + t * d.x();
        if (x < seg.x0 - 1e-9 || x > seg.x1 + 1e-9) continue;
        if (A + B * t <= 0.0) continue;
        if (n_cross < 32) crossings[n_cross++] = {t, surf == 0};
      }
    }
  }
  std::sort(crossings, crossings + n_cross,
            [](const WallCross& a, const WallCross& b) { return a.t < b.t; });
  for (int i = 0; i < n_cross; ++i) {
    const double t = crossings[i].t;
    const Eigen::Vector3d p = o + t * d;
    const double ang = std::atan2(p.y(), p.z());
    if (find_aperture(p.x(), ang) != nullptr) continue;  // passes through
    wall_block_t = t;
    if (t < best.range) {
      best.range = t;
      best.surface = RayHit::Surface::kWall;
      const double rho = std::hypot(p.y(), p.z());
      Eigen::Vector3d n(0.0, -p.y() / rho, -p.z() / rho);
      if (!crossings[i].inner) n = -n;
      best.normal = n;
    }
    break;
  }

  auto consider = [&](double t, RayHit::Surface surf, Fitting::Kind fk,
                      const Eigen::Vector3d& normal) {
    if (t > kTMin && t < best.range && t <= wall_block_t + 1e-9) {
      best.range = t;
      best.surface = surf;
      best.fitting_kind = fk;
      best.normal = normal;
    }
  };

  // Valve discs: front face, back face, rim.
  for (const Disc& disc : discs_) {
    for (int face = 0; face < 2; ++face) {
      const double xp = disc.x + (face == 0 ? 0.0 : kValveThickness);
      if (std::abs(d.x()) < 1e-12) continue;
      const double t = (xp - o.x()) / d.x();
      if (!(t > kTMin)) continue;
      const Eigen::Vector3d p = o + t * d;
      if (p.y() * p.y() + p.z() * p.z() <= disc.radius * disc.radius)
        consider(t, RayHit::Surface::kFitting, Fitting::Kind::kClosedValve,
                 Eigen::Vector3d(face == 0 ? -1.0 : 1.0, 0.0, 0.0));
    }
    {  // rim
      const double qa = d.y() * d.y() + d.z() * d.z();
      const double qb = 2.0 * (o.y() * d.y() + o.z() * d.z());
      const double qc = o.y() * o.y() + o.z() * o.z() - disc.radius * disc.radius;
      double t0, t1;
      quad_roots(qa, qb, qc, &t0, &t1);
      for (double t : {t0, t1}) {
        if (!(t > kTMin)) continue;
        const Eigen::Vector3d p = o + t * d;
        if (p.x() >= disc.x && p.x() <= disc.x + kValveThickness) {
          const double rho = std::hypot(p.y(), p.z());
          consider(t, RayHit::Surface::kFitting, Fitting::Kind::kClosedValve,
                   Eigen::Vector3d(0.0, p.y() / rho, p.z() / rho));
        }
      }
    }
  }

  // Obstacle prisms.
  for (const Prism& pr : prisms_) {
    {  // inner (proud) cylinder surface
      const double qa = d.y() * d.y() + d.z() * d.z();
      const double qb = 2.0 * (o.y() * d.y() + o.z() * d.z());
      const double qc = o.y() * o.y() + o.z() * o.z() - pr.r_inner * pr.r_inner;
      double t0, t1;
      quad_roots(qa, qb, qc, &t0, &t1);
      for (double t : {t0, t1}) {
        if (!(t > kTMin)) continue;
        const Eigen::Vector3d p = o + t * d;
        const double ang = std::atan2(p.y(), p.z());
        if (p.x() >= pr.x0 && p.x() <= pr.x1 &&
            std::abs(wrap_angle(ang - pr.ang_c)) <= pr.ang_half) {
          const double rho = std::hypot(p.y(), p.z());
          consider(t, RayHit::Surface::kFitting, Fitting::Kind::kObstacle,
                   Eigen::Vector3d(0.0, -p.y() / rho, -p.z() / rho));
        }
      }
    }
    for (int face = 0; face < 2; ++face) {  // axial end faces
      if (std::abs(d.x()) < 1e-12) continue;
      const double xp = face == 0 ? pr.x0 : pr.x1;
      const double t = (xp - o.x()) / d.x();
      if (!(t > kTMin)) continue;
      const Eigen::Vector3d p = o + t * d;
      const double rho = std::hypot(p.y(), p.z());
      const double ang = std::atan2(p.y(), p.z());
      if (rho >= pr.r_inner && rho <= pr.r_outer + kWallThickness &&
          std::abs(wrap_angle(ang - pr.ang_c)) <= pr.ang_half)
        consider(t, RayHit::Surface::kFitting, Fitting::Kind::kObstacle,
                 Eigen::Vector3d(face == 0 ? -1.0 : 1.0, 0.0, 0.0));
    }
    for (int side = 0; side < 2; ++side) {  // angular side faces
      const double ang_s = pr.ang_c + (side == 0 ? -pr.ang_half : pr.ang_half);
      const double ns = std::cos(ang_s), nc = -std::sin(ang_s);
      // Plane y*cos(a) - z*sin(a) = 0 contains the pipe axis.
      const double denom = d.y() * ns + d.z() * nc;
      if (std::abs(denom) < 1e-12) continue;
      const double t = -(o.y() * ns + o.z() * nc) / denom;
      if (!(t > kTMin)) continue;
      const Eigen::Vector3d p = o + t * d;
      const double rho = std::hypot(p.y(), p.z());
      const double ang = std::atan2(p.y(), p.z());
      if (p.x() >= pr.x0 && p.x() <= pr.x1 && rho >= pr.r_inner &&
          rho <= pr.r_outer + kWallThickness &&
          std::abs(wrap_angle(ang - pr.ang_c)) <= pr.ang_half + 1e-6) {
        Eigen::Vector3d n(0.0, ns, nc);
        if (n.dot(d) > 0) n = -n;
        consider(t, RayHit::Surface::kFitting, Fitting::Kind::kObstacle, n);
      }
    }
  }

  // Swept tee branch capsules.
  for (const Capsule& cap : capsules_) {
    const Eigen::Vector3d ab = cap.b - cap.a;
    const double len = ab.norm();
    const Eigen::Vector3d u = ab / len;
    const Eigen::Vector3d m = o - cap.a;
    const Eigen::Vector3d q = m - m.dot(u) * u;
    const Eigen::Vector3d w = d - d.dot(u) * u;
    const double qa = w.squaredNorm();
    const double qb = 2.0 * q.dot(w);
    const double qc = q.squaredNorm() - cap.radius * cap.radius;
    double t0, t1;
    quad_roots(qa, qb, qc, &t0, &t1);
    for (double t : {t0, t1}) {
      if (!(t > kTMin)) continue;
      const Eigen::Vector3d p = o + t * d;
      const double sax = (p - cap.a).dot(u);
      if (sax >= 0.0 && sax <= len) {
        const Eigen::Vector3d axis_pt = cap.a + sax * u;
        consider(t, RayHit::Surface::kFitting, Fitting::Kind::kSweptT,
                 (p - axis_pt).normalized() * -1.0);
      }
    }
    for (const Eigen::Vector3d& c : {cap.a, cap.b}) {  // spherical caps
      const Eigen::Vector3d mm = o - c;
      const double sb = 2.0 * mm.dot(d);
      const double sc = mm.squaredNorm() - cap.radius * cap.radius;
      double s0, s1;
      quad_roots(1.0, sb, sc, &s0, &s1);
      for (double t : {s0, s1}) {
        if (!(t > kTMin)) continue;
        const Eigen::Vector3d p = o + t * d;
        const double sax = (p - cap.a).dot(u);
        if (sax < 0.0 || sax > len)
          consider(t, RayHit::Surface::kFitting, Fitting::Kind::kSweptT,
                   (c - p).normalized());
      }
    }
  }

  // Port stubs: tube inner/outer surface plus blind cap.
  for (const Stub& st : stubs_) {
    const Eigen::Vector3d u = st.dir;
    const Eigen::Vector3d m = o - st.base;
    const Eigen::Vector3d q = m - m.dot(u) * u;
    const Eigen::Vector3d w = d - d.dot(u) * u;
    for (int surf = 0; surf < 2; ++surf) {
      const double r = surf == 0 ? st.radius : st.radius + kWallThickness;
      const double qa = w.squaredNorm();
      const double qb = 2.0 * q.dot(w);
      const double qc = q.squaredNorm() - r * r;
      double t0, t1;
      quad_roots(qa, qb, qc, &t0, &t1);
      for (double t : {t0, t1}) {
        if (!(t > kTMin)) continue;
        const Eigen::Vector3d p = o + t * d;
        const double sax = (p - st.base).dot(u);
        if (sax >= 0.0 && sax <= st.depth + kWallThickness) {
          const Eigen::Vector3d axis_pt = st.base + sax * u;
          Eigen::Vector3d n = (p - axis_pt).normalized();
          if (surf == 0) n = -n;
          consider(t, RayHit::Surface::kFitting, Fitting::Kind::kPort, n);
        }
      }
    }
    for (int face = 0; face < 2; ++face) {  // cap planes
      const double sdepth = st.depth + (face == 0 ? 0.0 : kWallThickness);
      const double denom = d.dot(u);
      if (std::abs(denom) < 1e-12) continue;
      const double t = (sdepth - m.dot(u)) / denom;
      if (!(t > kTMin)) continue;
      const Eigen::Vector3d p = o + t * d;
      const Eigen::Vector3d rad = (p - st.base) - (p - st.base).dot(u) * u;
      const double rlim = face == 0 ? st.radius : st.radius + kWallThickness;
      if (rad.squaredNorm() <= rlim * rlim)
        consider(t, RayHit::Surface::kFitting, Fitting::Kind::kPort,
                 face == 0 ? Eigen::Vector3d(-u) : Eigen::Vector3d(u));
    }
  }

  // Launch rig floor outside the entrance.
  if (std::abs(d.z()) > 1e-12) {
    const double t = (-radius_ - o.z()) / d.z();
    if (t > kTMin) {
      const Eigen::Vector3d p = o + t * d;
      if (p.x() <= 0.0)
        consider(t, RayHit::Surface::kFloor, Fitting::Kind::kClosedValve,
                 Eigen::Vector3d(0.0, 0.0, 1.0));
    }
  }

  if (best.surface == RayHit::Surface::kNone) best.range = kRangeClamp;
  return best;
}

double World::radius_at(double x) const {
  if (x < -1e-9 || x > open_x_ + 1e-9)
    throw std::out_of_range("radius_at: x outside the pipe bore");
  for (const RadiusSegment& seg : segments_)
    if (x >= seg.x0 - 1e-9 && x <= seg.x1 + 1e-9) return seg.radius_at(x);
  return segments_.empty() ? radius_ : segments_.back().r1;
}

bool World::solid_at(const Eigen::Vector3d& p) const {
  const double rho = std::hypot(p.y(), p.z());
  const double ang = std::atan2(p.y(), p.z());

  // Main wall shell.
  if (p.x() >= 0.0 && p.x() <= open_x_) {
    double r_loc = -1.0;
    for (const RadiusSegment& seg : segments_)
      if (p.x() >= seg.x0 - 1e-12 && p.x() <= seg.x1 + 1e-12) {
        r_loc = seg.radius_at(p.x());
        break;
      }
    if (r_loc > 0.0 && rho >= r_loc && rho <= r_loc + kWallThickness &&
        find_aperture(p.x(), ang) == nullptr)
      return true;
  }

  for (const Disc& disc : discs_) {
    if (p.x() >= disc.x && p.x() <= disc.x + kValveThickness &&
        rho <= disc.radius)
      return true;
  }
  for (const Prism& pr : prisms_) {
    if (p.x() >= pr.x0 && p.x() <= pr.x1 && rho >= pr.r_inner &&
        rho <= pr.r_outer + kWallThickness &&
        std::abs(wrap_angle(ang - pr.ang_c)) <= pr.ang_half)
      return true;
  }
  for (const Capsule& cap : capsules_) {
    const Eigen::Vector3d ab = cap.b - cap.a;
    const double len = ab.norm();
    const Eigen::Vector3d u = ab / len;
    const double sax = std::clamp((p - cap.a).dot(u), 0.0, len);
    if ((p - (cap.a + sax * u)).norm() <= cap.radius) return true;
  }
  for (const Stub& st : stubs_) {
    const double sax = (p - st.base).dot(st.dir);
    const double rad = ((p - st.base) - sax * st.dir).norm();
    if (sax >= 0.0 && sax <= st.depth + kWallThickness) {
      if (rad >= st.radius && rad <= st.radius + kWallThickness) return true;
      if (sax >= st.depth && rad < st.radius) return true;
    }
  }
  // Rig floor slab.
  if (p.x() <= 0.0 && p.z() <= -radius_ && p.z() >= -radius_ - kWallThickness)
    return true;
  return false;
}

double World::protrusion_under(double x, double clock_rad) const {
  double h = 0.0;
  for (const Prism& pr : prisms_) {
    if (x >= pr.x0 && x <= pr.x1 &&
        std::abs(wrap_angle(clock_rad - pr.ang_c)) <= pr.ang_half)
      h = std::max(h, pr.r_outer - pr.r_inner);
  }
  for (const Disc& disc : discs_) {
    if (x >= disc.x - 0.02 && x <= disc.x + kValveThickness) h = std::max(h, 1.0);
  }
  for (const Capsule& cap : capsules_) {
    double r_loc = radius_;
    if (x >= 0.0 && x <= open_x_) {
      for (const RadiusSegment& seg : segments_)
        if (x >= seg.x0 - 1e-12 && x <= seg.x1 + 1e-12) {
          r_loc = seg.radius_at(x);
          break;
        }
    }
    const Eigen::Vector3d contact(x, r_loc * std::sin(clock_rad),
                                  r_loc * std::cos(clock_rad));
    const Eigen::Vector3d ab = cap.b - cap.a;
    const double len = ab.norm();
    const Eigen::Vector3d u = ab / len;
    const double sax = std::clamp((contact - cap.a).dot(u), 0.0, len);
    if ((contact - (cap.a + sax * u)).norm() <= cap.radius + 0.02)
      h = std::max(h, 0.5);
  }
  return h;
}

}  // namespace pipecrawl
