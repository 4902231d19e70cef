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

#include "pipecrawl/scenario_gen.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "pipecrawl/json_util.hpp"
#include "pipecrawl/rng.hpp"
#include "pipecrawl/vehicle.hpp"

namespace pipecrawl {

namespace {

using nlohmann::json;

double round_cm(double v) { return std::round(v * 100.0) / 100.0; }

// Within-envelope entrance: each axis at most 70% of its limit so stacked
// offsets stay comfortably deployable.
EntranceOffset draw_entrance(RngStream* rng, const VehicleConfig& cfg) {
  EntranceOffset e;
  e.dz = round_sig9(rng->uniform(-0.7, 0.7) * cfg.limit_dz);
  e.dy = round_sig9(rng->uniform(-0.7, 0.7) * cfg.limit_dy);
  e.yaw_deg = round_sig9(rng->uniform(-0.7, 0.7) * cfg.limit_yaw_deg);
  e.setback = round_sig9(rng->uniform(0.0, 0.6) * cfg.limit_setback);
  e.step = round_sig9(rng->uniform(0.0, 0.6) * cfg.limit_step);
  e.gap = round_sig9(rng->uniform(0.0, 0.6) * cfg.limit_gap);
  return e;
}

void spoil_one_axis(RngStream* rng, const VehicleConfig& cfg,
                    EntranceOffset* e) {
  const double over = rng->uniform(1.25, 1.6);
  switch (rng->integer(6)) {
    case 0: e->dz = round_sig9(cfg.limit_dz * over); break;
    case 1: e->dy = round_sig9(cfg.limit_dy * over); break;
    case 2: e->yaw_deg = round_sig9(cfg.limit_yaw_deg * over); break;
    case 3: e->setback = round_sig9(cfg.limit_setback * over); break;
    case 4: e->step = round_sig9(cfg.limit_step * over); break;
    case 5: e->gap = round_sig9(cfg.limit_gap * over); break;
  }
}

DepositProfile draw_deposit(RngStream* rng, double length) {
  DepositProfile d;
  d.background_rate = round_sig9(rng->uniform(5.0, 15.0));
  const double lo = 0.5;
  const double hi = length - 0.5;
  switch (rng->integer(3)) {
    case 0: {  // uniform level
      const double a = round_sig9(rng->uniform(500.0, 3000.0));
      d.breakpoints = {{lo, a}, {hi, a}};
      break;
    }
    case 1: {  // linear ramp
      const double a0 = round_sig9(rng->uniform(200.0, 1500.0));
      const double a1 = round_sig9(rng->uniform(1500.0, 4000.0));
      d.breakpoints = {{lo, a0}, {hi, a1}};
      break;
    }
    default: {  // level with one triangular concentration
      const double base = round_sig9(rng->uniform(200.0, 800.0));
      const double peak = round_sig9(rng->uniform(2000.0, 6000.0));
      const double xc = round_cm(rng->uniform(lo + 1.0, hi - 1.0));
      const double half = round_cm(rng->uniform(0.2, 0.5));
      d.breakpoints = {{lo, base},         {xc - half, base}, {xc, peak},
                       {xc + half, base},  {hi, base}};
      break;
    }
  }
  return d;
}

FaultInjection draw_fault(RngStream* rng, double forward_eta) {
  // Mid-pipe times land while the robot is between the entrance and the far
  // end; pre-run faults surface during the pre-QC hold instead.
  const double mid = rng->uniform(150.0, std::max(200.0, forward_eta * 0.9));
  FaultInjection f;
  switch (rng->integer(8)) {
    case 0:
      f = {0.0, FaultInjection::Kind::kGainShift,
           round_sig9(rng->uniform(1.06, 1.12))};
      break;
    case 1:
      f = {round_sig9(mid), FaultInjection::Kind::kDeadDetector, 1.0};
      break;
    case 2:
      f = {round_sig9(mid), FaultInjection::Kind::kEncoderScale,
           round_sig9(rng->uniform(0.0, 1.0) < 0.5 ? rng->uniform(1.4, 1.8)
                                                   : rng->uniform(0.55, 0.7))};
      break;
    case 3:
      f = {round_sig9(mid), FaultInjection::Kind::kTempRunaway,
           round_sig9(rng->uniform(0.3, 0.8))};
      break;
    case 4:
      f = {round_sig9(mid), FaultInjection::Kind::kDiskLow,
           round_sig9(rng->uniform(0.01, 0.04))};
      break;
    case 5:
      f = {round_sig9(mid), FaultInjection::Kind::kNodeHang,
           round_sig9(rng->uniform(3.0, 10.0))};
      break;
    case 6:
      f = {round_sig9(mid), FaultInjection::Kind::kBatteryDrain,
           round_sig9(rng->uniform(5.0, 9.0))};
      break;
    default:
      f = {0.0, FaultInjection::Kind::kContamination,
           round_sig9(rng->uniform(30.0, 80.0))};
      break;
  }
  return f;
}

}  // namespace

const char* to_string(SuiteEndType t) {
  switch (t) {
    case SuiteEndType::kClosedValve: return "closed_valve";
    case SuiteEndType::kOpenEnd: return "open_end";
    case SuiteEndType::kReducer: return "reducer";
    case SuiteEndType::kSweptT: return "swept_t";
  }
  return "closed_valve";
}

std::vector<SuiteEntry> gen_suite(const SuiteSpec& spec) {
  std::vector<SuiteEntry> out;
  if (spec.per_type <= 0) return out;

  const SuiteEndType types[] = {SuiteEndType::kClosedValve,
                                SuiteEndType::kOpenEnd, SuiteEndType::kReducer,
                                SuiteEndType::kSweptT};
  int index = 0;
  for (DiameterClass dia : spec.diameters) {
    const VehicleConfig cfg = VehicleConfig::for_class(dia);
    const double R = nominal_radius(dia);
    for (SuiteEndType type : types) {
      for (int k = 0; k < spec.per_type; ++k, ++index) {
        char tag[80];
        std::snprintf(tag, sizeof tag, "suite/%d", index);
        RngStream rng(spec.seed, tag);

        SuiteEntry entry;
        entry.end_type = type;
        Scenario& s = entry.scenario;
        s.diameter_class = dia;
        s.seed = mix_seed(spec.seed ^ static_cast<std::uint64_t>(index));
        s.pipe_length = round_cm(rng.uniform(6.0, 10.0));
        s.commanded_distance = s.pipe_length;
        s.entrance = draw_entrance(&rng, cfg);
        s.deposit = draw_deposit(&rng, s.pipe_length);

        char name[96];
        std::snprintf(name, sizeof name, "%s_%s_%02d",
                      dia == DiameterClass::kD30 ? "d30" : "d42",
                      to_string(type), k);
        s.name = name;

        Fitting f;
        switch (type) {
          case SuiteEndType::kClosedValve:
            f.kind = Fitting::Kind::kClosedValve;
            f.position = round_cm(s.pipe_length - rng.uniform(0.4, 0.9));
            break;
          case SuiteEndType::kOpenEnd:
            f.kind = Fitting::Kind::kOpenEnd;
            f.position = round_cm(s.pipe_length - rng.uniform(0.4, 0.9));
            break;
          case SuiteEndType::kReducer:
            f.kind = Fitting::Kind::kReducer;
            f.position = round_cm(s.pipe_length - rng.uniform(0.8, 1.3));
            f.exit_radius = round_sig9(R * rng.uniform(0.5, 0.7));
            break;
          case SuiteEndType::kSweptT:
            f.kind = Fitting::Kind::kSweptT;
            f.position = round_cm(s.pipe_length - rng.uniform(1.0, 1.5));
            f.branch_radius =
                round_sig9(std::max(0.05, R * rng.uniform(0.3, 0.5)));
            f.clock_angle_deg = round_sig9(rng.uniform(150.0, 210.0));
            break;
        }

        if (spec.obstacle_fraction > 0.0 &&
            rng.uniform() < spec.obstacle_fraction) {
          Fitting ob;
          ob.kind = Fitting::Kind::kObstacle;
          ob.position = round_cm(rng.uniform(2.0, f.span_begin() - 2.0));
          ob.height = round_sig9(rng.uniform(0.08, std::min(0.15, 0.5 * R)));
          ob.length = round_cm(rng.uniform(0.2, 0.5));
          ob.clock_angle_deg = round_sig9(rng.uniform(160.0, 200.0));
          s.fittings.push_back(ob);
          entry.has_obstacle = true;
        }
        s.fittings.push_back(f);

        if (spec.fault_fraction > 0.0 && rng.uniform() < spec.fault_fraction) {
          const double forward_eta =
              120.0 + f.position / nominal_speed(dia);
          s.faults.push_back(draw_fault(&rng, forward_eta));
          entry.has_fault = true;
        }

        if (spec.bad_deploy_fraction > 0.0 &&
            rng.uniform() < spec.bad_deploy_fraction) {
          spoil_one_axis(&rng, cfg, &s.entrance);
          entry.bad_deploy = true;
        }

        entry.filename = s.name + std::string(".json");
        out.push_back(std::move(entry));
      }
    }
  }
  return out;
}

std::string write_suite(const SuiteSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const std::vector<SuiteEntry> entries = gen_suite(spec);
  json manifest;
  manifest["format"] = "pipecrawl-suite-v1";
  manifest["seed"] = spec.seed;
  manifest["per_type"] = spec.per_type;
  manifest["count"] = static_cast<int>(entries.size());
  json arr = json::array();

  for (const SuiteEntry& e : entries) {
    const std::string text = scenario_to_json(e.scenario);
    const fs::path path = fs::path(out_dir) / e.filename;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;

    const Fitting& end = e.scenario.fittings.back();
    json m;
    m["file"] = e.filename;
    m["name"] = e.scenario.name;
    m["seed"] = e.scenario.seed;
    m["diameter_class"] = to_string(e.scenario.diameter_class);
    m["pipe_length"] = round_sig9(e.scenario.pipe_length);
    m["commanded_distance"] = round_sig9(e.scenario.commanded_distance);
    m["end_type"] = to_string(e.end_type);
    m["end_position"] = round_sig9(end.position);
    m["has_fault"] = e.has_fault;
    m["bad_deploy"] = e.bad_deploy;
    m["has_obstacle"] = e.has_obstacle;
    m["digest"] = digest_hex(text);
    arr.push_back(std::move(m));
  }
  manifest["scenarios"] = std::move(arr);

  const std::string text = manifest.dump(2) + "\n";
  std::ofstream f(fs::path(out_dir) / "manifest.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write manifest.json");
  f << text;
  return text;
}

SuiteSpec load_suite_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("suite spec: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ScenarioError("suite spec: expected an object");
  SuiteSpec spec;
  if (j.contains("per_type")) {
    if (!j["per_type"].is_number_integer())
      throw ScenarioError("suite spec: per_type must be an integer");
    spec.per_type = j["per_type"].get<int>();
    if (spec.per_type < 0) throw ScenarioError("suite spec: per_type must be >= 0");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ScenarioError("suite spec: seed must be an unsigned integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("diameters")) {
    if (!j["diameters"].is_array())
      throw ScenarioError("suite spec: diameters must be an array");
    spec.diameters.clear();
    for (const auto& d : j["diameters"]) {
      const std::string v = d.get<std::string>();
      if (v == "D30") spec.diameters.push_back(DiameterClass::kD30);
      else if (v == "D42") spec.diameters.push_back(DiameterClass::kD42);
      else throw ScenarioError("suite spec: diameters must be \"D30\"/\"D42\"");
    }
  }
  const auto frac = [&j](const char* key, double* out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number())
      throw ScenarioError(std::string("suite spec: ") + key + " must be a number");
    *out = j[key].get<double>();
    if (*out < 0.0 || *out > 1.0)
      throw ScenarioError(std::string("suite spec: ") + key + " must be in [0, 1]");
  };
  frac("fault_fraction", &spec.fault_fraction);
  frac("bad_deploy_fraction", &spec.bad_deploy_fraction);
  frac("obstacle_fraction", &spec.obstacle_fraction);
  return spec;
}

}  // namespace pipecrawl
