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

#include "pipecrawl/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include "json.hpp"

#include "pipecrawl/localization.hpp"
#include "pipecrawl/mission.hpp"
#include "pipecrawl/radiometry.hpp"
#include "pipecrawl/report.hpp"
#include "pipecrawl/rng.hpp"
#include "pipecrawl/safeguarding.hpp"
#include "pipecrawl/scenario_gen.hpp"
#include "pipecrawl/sensors.hpp"
#include "pipecrawl/vehicle.hpp"

namespace pipecrawl {

namespace {

using nlohmann::json;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void note(std::ostream* progress, const std::string& line) {
  if (progress) *progress << line << std::endl;
}

// 95th percentile of chi-square with k dof (Wilson-Hilferty).
double chi2_q95(int k) {
  const double z = 1.6448536269514722;
  const double a = 2.0 / (9.0 * k);
  const double c = 1.0 - a + z * std::sqrt(a);
  return k * c * c * c;
}

MissionParams verify_mission_params() {
  MissionParams p;
  p.keep_tick_log = false;
  return p;
}

// Fan missions out across worker threads, one scenario each. Results are
// independent of the fan-out because every mission owns its seeded streams.
std::vector<MissionResult> run_missions(const std::vector<Scenario>& scenarios,
                                        int threads, std::ostream* progress,
                                        const char* label) {
  std::vector<MissionResult> out(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  const MissionParams params = verify_mission_params();

  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < scenarios.size();) {
      out[i] = run_mission(scenarios[i], params);
      done.fetch_add(1);
    }
  };

  const int n = std::clamp<int>(threads, 1, static_cast<int>(scenarios.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  note(progress, fmt("  %s: %zu/%zu runs complete", label, done.load(),
                     scenarios.size()));
  return out;
}

Scenario base_scenario(const std::string& name, std::uint64_t seed,
                       double length) {
  Scenario s;
  s.name = name;
  s.diameter_class = DiameterClass::kD30;
  s.pipe_length = length;
  s.commanded_distance = length;
  s.seed = seed;
  s.deposit.background_rate = 10.0;
  s.deposit.breakpoints = {{0.5, 800.0}, {length - 0.5, 800.0}};
  return s;
}

Scenario end_case_scenario(SuiteEndType type, std::uint64_t seed) {
  Scenario s = base_scenario(std::string("endcase_") + to_string(type) +
                                 "_s" + std::to_string(seed),
                             seed, 8.0);
  Fitting f;
  switch (type) {
    case SuiteEndType::kClosedValve:
      f.kind = Fitting::Kind::kClosedValve;
      f.position = 7.2;
      break;
    case SuiteEndType::kOpenEnd:
      f.kind = Fitting::Kind::kOpenEnd;
      f.position = 7.2;
      break;
    case SuiteEndType::kReducer:
      f.kind = Fitting::Kind::kReducer;
      f.position = 6.8;
      f.exit_radius = 0.22;
      break;
    case SuiteEndType::kSweptT:
      f.kind = Fitting::Kind::kSweptT;
      f.position = 6.5;
      f.branch_radius = 0.15;
      f.clock_angle_deg = 180.0;
      break;
  }
  s.fittings.push_back(f);
  return s;
}

// ---------------------------------------------------------------------------
// Criteria 1 and 2: drift and reacquisition on the 33 m reference family.

struct DriftOutcome {
  CriterionResult drift;
  CriterionResult reacquire;
};

DriftOutcome criterion_drift(const VerifyOptions& opts) {
  constexpr int kRuns = 20;
  std::vector<Scenario> scenarios;
  for (int i = 0; i < kRuns; ++i)
    scenarios.push_back(reference_drift_scenario(1 + i));

  // Run serially when measuring the per-run wall clock budget; fan-out would
  // contend for cores and inflate the times.
  std::vector<MissionResult> results(scenarios.size());
  std::vector<double> wall(scenarios.size(), 0.0);
  const MissionParams params = verify_mission_params();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    results[i] = run_mission(scenarios[i], params);
    wall[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
  }
  note(opts.progress, fmt("  drift family: %d/%d runs complete", kRuns, kRuns));

  int drift_ok = 0;
  double worst_drift = 0.0, worst_wall = 0.0;
  int completed = 0;
  int reacquire_ok = 0;
  double worst_reacquire = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const MissionResult& r = results[i];
    if (r.exit_code == 0) ++completed;
    if (r.exit_code == 0 && r.max_drift <= 0.10) ++drift_ok;
    worst_drift = std::max(worst_drift, r.max_drift);
    worst_wall = std::max(worst_wall, wall[i]);
    if (r.exit_code == 0 && r.had_reacquire && r.reacquire_drift <= 0.03)
      ++reacquire_ok;
    worst_reacquire = std::max(worst_reacquire, r.reacquire_drift);
  }

  DriftOutcome out;
  out.drift.id = 1;
  out.drift.name = "localization drift <= 0.10 m over 33 m";
  out.drift.pass = drift_ok >= 19 && worst_wall <= 60.0 && completed == kRuns;
  out.drift.detail =
      fmt("%d/%d runs within 0.10 m (worst %.3f m), %d completed, slowest "
          "run %.1f s (budget 60 s)",
          drift_ok, kRuns, worst_drift, completed, worst_wall);

  out.reacquire.id = 2;
  out.reacquire.name = "re-convergence <= 0.03 m after reacquisition";
  out.reacquire.pass = reacquire_ok == kRuns;
  out.reacquire.detail = fmt("%d/%d runs reacquired within 0.03 m (worst %.3f m)",
                             reacquire_ok, kRuns, worst_reacquire);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: end-of-run trigger repeatability per end type.

CriterionResult criterion_repeatability(const VerifyOptions& opts) {
  CriterionResult c;
  c.id = 3;
  c.name = "end-of-run trigger spread <= 0.10 m per type";
  c.pass = true;

  const SuiteEndType types[] = {SuiteEndType::kClosedValve,
                                SuiteEndType::kOpenEnd, SuiteEndType::kReducer,
                                SuiteEndType::kSweptT};
  std::string detail;
  for (SuiteEndType type : types) {
    std::vector<Scenario> scenarios;
    for (int i = 0; i < 20; ++i)
      scenarios.push_back(end_case_scenario(type, 101 + i));
    const auto results =
        run_missions(scenarios, opts.threads, opts.progress, to_string(type));

    double lo = 1e9, hi = -1e9;
    int completed = 0;
    for (const MissionResult& r : results) {
      if (r.exit_code != 0) continue;
      ++completed;
      lo = std::min(lo, r.turnaround_truth_x);
      hi = std::max(hi, r.turnaround_truth_x);
    }
    const double spread = completed > 0 ? hi - lo : 1e9;
    const bool ok = completed == 20 && spread <= 0.10;
    c.pass = c.pass && ok;
    if (!detail.empty()) detail += ", ";
    detail += fmt("%s %.3f m (%d/20)", to_string(type), spread, completed);
  }
  c.detail = detail;
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 4: end classification over the randomized 40-scenario suite.

bool end_outcome_correct(const SuiteEntry& entry, const MissionResult& r) {
  if (r.exit_code != 0) return false;
  switch (entry.end_type) {
    case SuiteEndType::kClosedValve:
      return r.reported_end.valid && r.reported_end.kind == EndKind::kClosedPipe;
    case SuiteEndType::kOpenEnd:
      return r.reported_end.valid && r.reported_end.kind == EndKind::kOpenEnd;
    case SuiteEndType::kReducer:
      return r.reported_end.valid && r.reported_end.kind == EndKind::kReducer;
    case SuiteEndType::kSweptT:
      // A swept tee reverses through the obstruction safeguard, not a
      // circle classification.
      return r.abort_reason == AbortReason::kObstacle;
  }
  return false;
}

CriterionResult criterion_classification(const VerifyOptions& opts) {
  CriterionResult c;
  c.id = 4;
  c.name = "end classification 100% over 40-scenario suite";

  SuiteSpec spec;
  spec.per_type = 5;
  spec.seed = 7;
  const std::vector<SuiteEntry> suite = gen_suite(spec);

  std::vector<Scenario> scenarios;
  for (const SuiteEntry& e : suite) scenarios.push_back(e.scenario);
  const auto results =
      run_missions(scenarios, opts.threads, opts.progress, "classification");

  int correct = 0;
  std::string misses;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    if (end_outcome_correct(suite[i], results[i])) {
      ++correct;
    } else if (misses.size() < 200) {
      misses += fmt(" %s(end=%s,abort=%s,exit=%d)", suite[i].scenario.name.c_str(),
                    to_string(results[i].reported_end.kind),
                    to_string(results[i].abort_reason), results[i].exit_code);
    }
  }
  c.pass = correct == static_cast<int>(suite.size());
  c.detail = fmt("%d/%zu classified correctly%s%s", correct, suite.size(),
                 misses.empty() ? "" : "; misses:", misses.c_str());
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 5: safe return across a randomized fault-injected family.

CriterionResult criterion_safe_return(const VerifyOptions& opts) {
  CriterionResult c;
  c.id = 5;
  c.name = "safe return across >= 200 randomized scenarios";

  SuiteSpec spec;
  spec.per_type = 13;  // 13 x 4 types x 2 diameters = 208
  spec.seed = 11;
  spec.fault_fraction = 0.45;
  spec.bad_deploy_fraction = 0.05;
  spec.obstacle_fraction = 0.15;
  const std::vector<SuiteEntry> suite = gen_suite(spec);

  std::vector<Scenario> scenarios;
  for (const SuiteEntry& e : suite) scenarios.push_back(e.scenario);
  const auto results =
      run_missions(scenarios, opts.threads, opts.progress, "safe return");

  int deployed = 0, docked = 0, pre_entry_faults = 0, rejected = 0;
  int violations = 0;
  std::string examples;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const MissionResult& r = results[i];
    if (!r.deploy_error.empty()) {
      ++rejected;  // never deployed; envelope did its job
      continue;
    }
    ++deployed;
    const bool dock_ok = r.exit_code == 0 &&
                         r.final_state == MissionState::kQcPost &&
                         r.dock_truth_error <= 0.02;
    const bool fault_pre_entry =
        r.final_state == MissionState::kFault && !r.entrance_found;
    if (dock_ok) {
      ++docked;
    } else if (fault_pre_entry) {
      ++pre_entry_faults;
    } else {
      ++violations;
      if (examples.size() < 240)
        examples += fmt(" %s(state=%s,abort=%s,dock=%.3f)",
                        suite[i].scenario.name.c_str(), to_string(r.final_state),
                        to_string(r.abort_reason), r.dock_truth_error);
    }
  }
  c.pass = violations == 0 && results.size() >= 200;
  c.detail = fmt(
      "%zu scenarios: %d docked within 0.02 m, %d faulted before entry, %d "
      "rejected at deploy, %d violations%s%s",
      results.size(), docked, pre_entry_faults, rejected, violations,
      examples.empty() ? "" : ";", examples.c_str());
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 6: deployment envelope limits.

CriterionResult criterion_envelope(const VerifyOptions& opts) {
  CriterionResult c;
  c.id = 6;
  c.name = "deployment envelope: at-limit docks, +20% rejects";

  const VehicleConfig cfg = VehicleConfig::for_class(DiameterClass::kD30);
  struct Axis {
    const char* name;
    void (*set)(EntranceOffset*, double);
    double limit;
  };
  const Axis axes[] = {
      {"dz", [](EntranceOffset* e, double v) { e->dz = v; }, cfg.limit_dz},
      {"dy", [](EntranceOffset* e, double v) { e->dy = v; }, cfg.limit_dy},
      {"yaw_deg", [](EntranceOffset* e, double v) { e->yaw_deg = v; },
       cfg.limit_yaw_deg},
      {"setback", [](EntranceOffset* e, double v) { e->setback = v; },
       cfg.limit_setback},
      {"step", [](EntranceOffset* e, double v) { e->step = v; },
       cfg.limit_step},
      {"gap", [](EntranceOffset* e, double v) { e->gap = v; }, cfg.limit_gap},
  };

  std::vector<Scenario> at_limit;
  for (std::size_t i = 0; i < 6; ++i) {
    Scenario s = base_scenario(fmt("envelope_%s", axes[i].name), 301 + i, 6.0);
    Fitting f;
    f.kind = Fitting::Kind::kClosedValve;
    f.position = 5.2;
    s.fittings.push_back(f);
    axes[i].set(&s.entrance, axes[i].limit);
    at_limit.push_back(std::move(s));
  }
  const auto results =
      run_missions(at_limit, opts.threads, opts.progress, "envelope");

  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < 6; ++i) {
    const bool ok = results[i].exit_code == 0 &&
                    results[i].final_state == MissionState::kQcPost &&
                    results[i].dock_truth_error <= 0.02;
    pass = pass && ok;
    if (!ok)
      detail += fmt(" at-limit %s failed (state=%s, dock=%.3f);", axes[i].name,
                    to_string(results[i].final_state),
                    results[i].dock_truth_error);
  }

  int rejected = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    EntranceOffset e;
    axes[i].set(&e, axes[i].limit * 1.2);
    DeployError err;
    if (!deploy(e, cfg, &err) && !err.axis.empty()) {
      ++rejected;
    } else {
      pass = false;
      detail += fmt(" +20%% %s not rejected;", axes[i].name);
    }
  }

  c.pass = pass;
  c.detail = detail.empty()
                 ? fmt("6/6 at-limit runs docked, %d/6 over-limit rejected",
                       rejected)
                 : detail;
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 7: factor graph vs dense weighted least squares.

void dense_solve(const std::vector<LocNode>& nodes,
                 const LocalizerParams& params, double anchor_value,
                 Eigen::VectorXd* x_out, Eigen::VectorXd* sigma_out) {
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
      const double w = nodes[k].abs_count /
                       (params.sigma_range * params.sigma_range);
      info(k, k) += w;
      rhs(k) += w * nodes[k].abs_meas;
    }
  }
  const Eigen::MatrixXd cov = info.inverse();
  *x_out = cov * rhs;
  *sigma_out = cov.diagonal().cwiseSqrt();
}

CriterionResult criterion_graph_oracle(const VerifyOptions&) {
  CriterionResult c;
  c.id = 7;
  c.name = "factor graph matches dense WLS within 1e-9";

  RngStream rng(2026, "graph-oracle");
  LocalizerParams params;
  double worst = 0.0;
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.integer(9));
    std::vector<LocNode> nodes(n);
    double odo = 0.0;
    for (int i = 0; i < n; ++i) {
      nodes[i].time = i;
      if (i > 0) {
        nodes[i].odo_delta = rng.uniform(0.01, 0.12);
        odo += nodes[i].odo_delta;
      }
      nodes[i].odo = odo;
      if (rng.uniform() < 0.4) {
        nodes[i].abs_count = 1 + static_cast<int>(rng.integer(3));
        nodes[i].abs_meas = odo + rng.gaussian(0.0, 0.03);
      }
    }
    const double anchor = rng.uniform(0.0, 1.0);

    Eigen::VectorXd x_dense, sigma_dense;
    dense_solve(nodes, params, anchor, &x_dense, &sigma_dense);
    solve_graph(nodes, params, anchor);

    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      err = std::max(err, std::abs(nodes[i].x - x_dense(i)));
      err = std::max(err, std::abs(nodes[i].sigma - sigma_dense(i)));
    }
    worst = std::max(worst, err);
    if (err <= 1e-9) ++ok;
  }

  // Worked 3-node chain: anchor 0 (sigma 1e-3), two unit odometry edges
  // (sigma 0.1), absolute 2.2 at the last node (sigma 0.1).
  LocalizerParams wp;
  wp.sigma_anchor = 1e-3;
  wp.sigma_range = 0.1;
  wp.odo_sigma_frac = 0.1;
  wp.odo_sigma_floor = 1e-9;
  std::vector<LocNode> worked(3);
  worked[0] = {0.0, 0.0, 0.0, 0.0, 0, 0.0, 0.0};
  worked[1] = {1.0, 1.0, 1.0, 0.0, 0, 0.0, 0.0};
  worked[2] = {2.0, 2.0, 1.0, 2.2, 1, 0.0, 0.0};
  solve_graph(worked, wp, 0.0);
  const bool worked_ok = std::abs(worked[0].x - 0.0) <= 1e-3 &&
                         std::abs(worked[1].x - 1.0667) <= 1e-3 &&
                         std::abs(worked[2].x - 2.1333) <= 1e-3;

  c.pass = ok == 100 && worked_ok;
  c.detail = fmt("%d/100 random graphs within 1e-9 (worst %.2e); worked "
                 "example [%.4f, %.4f, %.4f] %s",
                 ok, worst, worked[0].x, worked[1].x, worked[2].x,
                 worked_ok ? "ok" : "WRONG");
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 8: cylinder fit robustness.

CriterionResult criterion_ransac(const VerifyOptions&) {
  CriterionResult c;
  c.id = 8;
  c.name = "cylinder fit: 5 mm/1 deg under noise, 1 mm/0.1 deg clean";

  RngStream rng(2026, "ransac-oracle");
  FitParams params;
  const double R = params.nominal_radius;

  auto make_cloud = [&](double sigma, double outlier_frac, Eigen::Vector3d* axis_dir,
                        Eigen::Vector2d* center) {
    const double cy = rng.uniform(-0.03, 0.03);
    const double cz = rng.uniform(-0.03, 0.03);
    const double sy = rng.uniform(-0.05, 0.05);
    const double sz = rng.uniform(-0.05, 0.05);
    *center = Eigen::Vector2d(cy, cz);
    const Eigen::Vector3d u = Eigen::Vector3d(1.0, sy, sz).normalized();
    *axis_dir = u;
    const Eigen::Vector3d v = Eigen::Vector3d::UnitY() -
                              u * u.y();
    const Eigen::Vector3d vv = v.normalized();
    const Eigen::Vector3d w = u.cross(vv);

    std::vector<Eigen::Vector3d> cloud;
    cloud.reserve(1500);
    const Eigen::Vector3d origin(0.0, cy, cz);
    for (int i = 0; i < 1500; ++i) {
      const double t = rng.uniform(0.8, 2.2);
      const double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      const bool outlier = rng.uniform() < outlier_frac;
      const double rho = outlier ? R * rng.uniform(0.0, 0.9)
                                 : R + rng.gaussian(0.0, sigma);
      cloud.push_back(origin + u * t +
                      (vv * std::cos(phi) + w * std::sin(phi)) * rho);
    }
    return cloud;
  };

  RngStream fit_rng(2026, "ransac-oracle-fit");
  int ok = 0;
  double worst_r = 0.0, worst_a = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d axis;
    Eigen::Vector2d center;
    const auto cloud = make_cloud(0.005, 0.20, &axis, &center);
    const CylinderFit fit = fit_cylinder(cloud, params, fit_rng);
    if (!fit.ok()) continue;
    const double r_err = std::abs(fit.radius - R);
    const double a_err = rad2deg(std::acos(
        std::clamp(fit.axis_dir().normalized().dot(axis), -1.0, 1.0)));
    worst_r = std::max(worst_r, r_err);
    worst_a = std::max(worst_a, a_err);
    if (r_err < 0.005 && a_err < 1.0) ++ok;
  }

  Eigen::Vector3d axis;
  Eigen::Vector2d center;
  const auto clean = make_cloud(0.0, 0.0, &axis, &center);
  const CylinderFit cf = fit_cylinder(clean, params, fit_rng);
  const double clean_r = cf.ok() ? std::abs(cf.radius - R) : 1e9;
  const double clean_a =
      cf.ok() ? rad2deg(std::acos(std::clamp(
                    cf.axis_dir().normalized().dot(axis), -1.0, 1.0)))
              : 1e9;

  c.pass = ok >= 95 && clean_r < 0.001 && clean_a < 0.1;
  c.detail = fmt("%d/100 noisy trials within (5 mm, 1 deg), worst (%.4f m, "
                 "%.2f deg); clean fit (%.5f m, %.3f deg)",
                 ok, worst_r, worst_a, clean_r, clean_a);
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 9: FIR filter properties.

CriterionResult criterion_fir(const VerifyOptions&) {
  CriterionResult c;
  c.id = 9;
  c.name = "FIR: unit DC gain, ~25x variance reduction";

  FirFilter fir(25);
  double dc = 0.0;
  for (int i = 0; i < 100; ++i) dc = fir.push(1.0);
  const bool dc_ok = std::abs(dc - 1.0) <= 1e-12;

  FirFilter fir2(25);
  RngStream rng(2026, "fir-noise");
  constexpr int kN = 10000;
  double sum = 0.0, sum2 = 0.0;
  int count = 0;
  for (int i = 0; i < kN + 24; ++i) {
    const double y = fir2.push(rng.gaussian());
    if (i >= 24) {
      sum += y;
      sum2 += y * y;
      ++count;
    }
  }
  const double mean = sum / count;
  const double var = sum2 / count - mean * mean;
  const double reduction = 1.0 / var;
  const bool var_ok = reduction >= 22.5 && reduction <= 27.5;

  c.pass = dc_ok && var_ok;
  c.detail = fmt("DC gain %.15f; variance reduction x%.2f over %d samples",
                 dc, reduction, kN);
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 10: QC statistics.

CriterionResult criterion_qc_stats(const VerifyOptions&) {
  CriterionResult c;
  c.id = 10;
  c.name = "QC statistics: false alarms, z example, gain fault";

  RngStream rng(2026, "qc-null");
  constexpr int kTrials = 10000;
  const double lam = 600.0;  // 10 cps background, 60 s acquisitions
  int alarms = 0;
  for (int i = 0; i < kTrials; ++i) {
    const double pre = static_cast<double>(rng.poisson(lam));
    const double post = static_cast<double>(rng.poisson(lam));
    if (!contamination_check(pre, post).pass) ++alarms;
  }
  const double rate = static_cast<double>(alarms) / kTrials;
  const bool rate_ok = rate >= 0.001 && rate <= 0.006;

  const ContaminationCheck zc = contamination_check(10000.0, 10700.0);
  const bool z_ok = !zc.pass && std::abs(zc.z - 4.87) <= 0.01;

  const NoiseConfig noise;
  CheckSourceExpectation exp;
  exp.energy_kev = noise.am241_energy_kev;
  exp.rate_cps = noise.am241_rate_cps;
  exp.fwhm_kev = noise.am241_fwhm_frac * noise.am241_energy_kev;

  RngStream src_rng(2026, "qc-source");
  int null_pass = 0;
  constexpr int kNull = 500;
  for (int i = 0; i < kNull; ++i) {
    const Spectrum s = sample_check_source(60.0, noise, 1.0, false, src_rng);
    if (check_source_qc(s, exp).pass) ++null_pass;
  }
  const bool null_ok = null_pass >= static_cast<int>(0.99 * kNull);

  int gain_fail = 0;
  constexpr int kGain = 200;
  for (int i = 0; i < kGain; ++i) {
    const Spectrum s = sample_check_source(60.0, noise, 1.05, false, src_rng);
    if (!check_source_qc(s, exp).pass) ++gain_fail;
  }
  const bool gain_ok = gain_fail == kGain;

  c.pass = rate_ok && z_ok && null_ok && gain_ok;
  c.detail = fmt("null false alarms %.2f%% (band 0.1-0.6%%); z(10000,10700)="
                 "%.3f; null pass %d/%d; x1.05 gain fail %d/%d",
                 100.0 * rate, zc.z, null_pass, kNull, gain_fail, kGain);
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 11: radiometric consistency.

CriterionResult criterion_radiometry(const VerifyOptions& opts) {
  CriterionResult c;
  c.id = 11;
  c.name = "per-foot chi-square, fwd/rev 3-sigma, exact conservation";

  // Uniform deposit: every fully-dwelled foot shares one expected rate.
  Scenario uniform = base_scenario("radiometric_uniform", 77, 10.0);
  uniform.deposit.breakpoints = {{0.5, 1500.0}, {9.5, 1500.0}};
  Fitting f;
  f.kind = Fitting::Kind::kClosedValve;
  f.position = 9.3;
  uniform.fittings.push_back(f);

  Scenario point = base_scenario("radiometric_point", 79, 8.0);
  point.deposit.breakpoints = {{3.6, 0.0}, {4.0, 6000.0}, {4.4, 0.0}};
  Fitting pf;
  pf.kind = Fitting::Kind::kClosedValve;
  pf.position = 7.3;
  point.fittings.push_back(pf);

  const auto results = run_missions({uniform, point}, opts.threads,
                                    opts.progress, "radiometric");
  const MissionResult& ur = results[0];
  const MissionResult& pr = results[1];

  // Chi-square homogeneity across interior forward feet.
  double swx = 0.0, sw = 0.0;
  std::vector<const FootSegment*> feet;
  for (const FootSegment& seg : ur.feet_forward) {
    if (seg.x_lo < 1.2 || seg.x_hi > 7.8 || seg.live_time <= 0.0) continue;
    feet.push_back(&seg);
    const double w = 1.0 / (seg.sigma_cps * seg.sigma_cps);
    swx += w * seg.rate_cps;
    sw += w;
  }
  double chi2 = 0.0;
  const double mean_rate = sw > 0.0 ? swx / sw : 0.0;
  for (const FootSegment* seg : feet) {
    const double d = (seg->rate_cps - mean_rate) / seg->sigma_cps;
    chi2 += d * d;
  }
  const int dof = std::max(1, static_cast<int>(feet.size()) - 1);
  const double limit = chi2_q95(dof);
  const bool chi_ok = ur.exit_code == 0 && feet.size() >= 10 && chi2 <= limit;

  // Point deposit: forward and reverse profiles agree within combined 3
  // sigma on every shared foot.
  int compared = 0, within = 0;
  double worst_pull = 0.0;
  for (const FootSegment& fw : pr.feet_forward) {
    if (fw.x_lo < 1.0 || fw.x_hi > 6.8 || fw.live_time <= 0.0) continue;
    for (const FootSegment& rv : pr.feet_reverse) {
      if (rv.index != fw.index || rv.live_time <= 0.0) continue;
      ++compared;
      const double sig = std::sqrt(fw.sigma_cps * fw.sigma_cps +
                                   rv.sigma_cps * rv.sigma_cps);
      const double pull = std::abs(fw.rate_cps - rv.rate_cps) / sig;
      worst_pull = std::max(worst_pull, pull);
      if (pull <= 3.0) ++within;
    }
  }
  const bool agree_ok = pr.exit_code == 0 && compared >= 10 && within == compared;

  // Conservation: binned counts must add back up to the sampled counts.
  auto conservation = [](const MissionResult& r) {
    double samples = 0.0;
    for (const GammaSample& g : r.gamma_samples) samples += g.roi_counts;
    double feet_sum = 0.0;
    for (const FootSegment& seg : r.feet_forward) feet_sum += seg.counts;
    for (const FootSegment& seg : r.feet_reverse) feet_sum += seg.counts;
    return std::abs(samples - feet_sum) <=
           1e-6 * std::max(1.0, std::abs(samples));
  };
  const bool conserve_ok = conservation(ur) && conservation(pr);

  c.pass = chi_ok && agree_ok && conserve_ok;
  c.detail = fmt("chi2 %.1f on %d feet (95%% limit %.1f); fwd/rev %d/%d "
                 "within 3 sigma (worst %.2f); conservation %s",
                 chi2, static_cast<int>(feet.size()), limit, within, compared,
                 worst_pull, conserve_ok ? "exact" : "VIOLATED");
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 12: byte-identical reports.

CriterionResult criterion_determinism(const VerifyOptions& opts) {
  CriterionResult c;
  c.id = 12;
  c.name = "byte-identical report for identical (scenario, seed)";

  const Scenario s = end_case_scenario(SuiteEndType::kClosedValve, 5);
  const std::string digest = digest_hex(scenario_to_json(s));
  const auto results =
      run_missions({s, s}, 1, opts.progress, "determinism");
  const std::string a = render_report_json(results[0], digest);
  const std::string b = render_report_json(results[1], digest);
  c.pass = a == b && results[0].exit_code == 0;
  c.detail = fmt("%zu-byte reports %s (exit %d)", a.size(),
                 a == b ? "identical" : "DIFFER", results[0].exit_code);
  return c;
}

}  // namespace

int thread_cap_from_env(int fallback) {
  const char* env = std::getenv("PIPECRAWL_THREADS");
  if (env == nullptr) return fallback;
  const int v = std::atoi(env);
  return v >= 1 ? v : fallback;
}

Scenario reference_drift_scenario(std::uint64_t seed) {
  Scenario s = base_scenario("ref_33m_s" + std::to_string(seed), seed, 40.0);
  s.commanded_distance = 33.0;
  s.noise.rangefinder_dropout_beyond = 25.0;
  return s;
}

std::vector<CriterionResult> run_acceptance(const VerifyOptions& opts) {
  std::vector<CriterionResult> all;
  note(opts.progress, "criteria 1-2: 33 m drift family (20 runs, serial)");
  const DriftOutcome drift = criterion_drift(opts);
  all.push_back(drift.drift);
  all.push_back(drift.reacquire);
  note(opts.progress, "criterion 3: end repeatability (80 runs)");
  all.push_back(criterion_repeatability(opts));
  note(opts.progress, "criterion 4: end classification suite (40 runs)");
  all.push_back(criterion_classification(opts));
  note(opts.progress, "criterion 5: safe return suite (208 runs)");
  all.push_back(criterion_safe_return(opts));
  note(opts.progress, "criterion 6: deployment envelope (6 runs + 6 rejects)");
  all.push_back(criterion_envelope(opts));
  note(opts.progress, "criterion 7: factor graph oracle");
  all.push_back(criterion_graph_oracle(opts));
  note(opts.progress, "criterion 8: cylinder fit robustness");
  all.push_back(criterion_ransac(opts));
  note(opts.progress, "criterion 9: FIR properties");
  all.push_back(criterion_fir(opts));
  note(opts.progress, "criterion 10: QC statistics");
  all.push_back(criterion_qc_stats(opts));
  note(opts.progress, "criterion 11: radiometric consistency (2 runs)");
  all.push_back(criterion_radiometry(opts));
  note(opts.progress, "criterion 12: determinism (2 runs)");
  all.push_back(criterion_determinism(opts));
  return all;
}

std::vector<CriterionResult> verify_report_dirs(
    const std::vector<std::string>& dirs, const VerifyOptions& opts) {
  namespace fs = std::filesystem;
  std::vector<json> reports;
  for (const std::string& dir : dirs) {
    if (!fs::exists(dir))
      throw std::runtime_error("verify: no such directory: " + dir);
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file() ||
          entry.path().filename() != "report.json")
        continue;
      std::ifstream in(entry.path(), std::ios::binary);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw std::runtime_error("verify: bad report " + entry.path().string() +
                                 ": " + e.what());
      }
      reports.push_back(std::move(j));
    }
  }
  if (reports.empty())
    throw std::runtime_error("verify: no report.json found under the given "
                             "directories");

  std::vector<CriterionResult> out;

  // Criterion 1/2 analogues over any reference-family reports present.
  int ref_total = 0, drift_ok = 0, reacq_ok = 0;
  double worst_drift = 0.0, worst_reacq = 0.0;
  for (const json& r : reports) {
    const std::string name = r.at("scenario").at("name").get<std::string>();
    if (name.rfind("ref_33m_", 0) != 0) continue;
    ++ref_total;
    const auto& loc = r.at("localization");
    const double drift = loc.at("max_drift_m").get<double>();
    worst_drift = std::max(worst_drift, drift);
    if (drift <= 0.10 && r.at("termination").at("exit_code").get<int>() == 0)
      ++drift_ok;
    const double re = loc.at("reacquire_drift_m").get<double>();
    worst_reacq = std::max(worst_reacq, re);
    if (loc.at("had_reacquire").get<bool>() && re <= 0.03) ++reacq_ok;
  }
  {
    CriterionResult c;
    c.id = 1;
    c.name = "localization drift <= 0.10 m over 33 m";
    if (ref_total == 0) {
      c.evaluated = false;
      c.detail = "no ref_33m_* runs in bundle";
    } else {
      c.pass = drift_ok >= (ref_total * 19 + 19) / 20;
      c.detail = fmt("%d/%d within 0.10 m (worst %.3f m)", drift_ok, ref_total,
                     worst_drift);
    }
    out.push_back(c);
    CriterionResult c2;
    c2.id = 2;
    c2.name = "re-convergence <= 0.03 m after reacquisition";
    if (ref_total == 0) {
      c2.evaluated = false;
      c2.detail = "no ref_33m_* runs in bundle";
    } else {
      c2.pass = reacq_ok == ref_total;
      c2.detail = fmt("%d/%d reacquired within 0.03 m (worst %.3f m)",
                      reacq_ok, ref_total, worst_reacq);
    }
    out.push_back(c2);
  }

  // Determinism across duplicate (digest, seed) pairs when present.
  {
    CriterionResult c;
    c.id = 12;
    c.name = "byte-identical report for identical (scenario, seed)";
    int pairs = 0, equal = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t k = i + 1; k < reports.size(); ++k) {
        const auto& a = reports[i].at("scenario");
        const auto& b = reports[k].at("scenario");
        if (a.at("digest") == b.at("digest") && a.at("seed") == b.at("seed")) {
          ++pairs;
          if (reports[i].dump() == reports[k].dump()) ++equal;
        }
      }
    }
    if (pairs == 0) {
      c.evaluated = false;
      c.detail = "no duplicate (scenario, seed) pairs in bundle";
    } else {
      c.pass = equal == pairs;
      c.detail = fmt("%d/%d duplicate pairs identical", equal, pairs);
    }
    out.push_back(c);
  }

  // The mission-free statistical criteria always run.
  out.push_back(criterion_graph_oracle(opts));
  out.push_back(criterion_ransac(opts));
  out.push_back(criterion_fir(opts));
  out.push_back(criterion_qc_stats(opts));

  std::sort(out.begin(), out.end(),
            [](const CriterionResult& a, const CriterionResult& b) {
              return a.id < b.id;
            });
  return out;
}

bool print_criteria(const std::vector<CriterionResult>& results,
                    std::ostream& os) {
  bool all_pass = true;
  int evaluated = 0;
  for (const CriterionResult& c : results) {
    if (!c.evaluated) {
      os << "SKIP " << c.id << ". " << c.name << ": " << c.detail << "\n";
      continue;
    }
    ++evaluated;
    all_pass = all_pass && c.pass;
    os << (c.pass ? "PASS " : "FAIL ") << c.id << ". " << c.name << ": "
       << c.detail << "\n";
  }
  os << (all_pass && evaluated > 0 ? "ACCEPTANCE: all evaluated criteria pass"
                                   : "ACCEPTANCE: FAILURES PRESENT")
     << " (" << evaluated << " evaluated)\n";
  return all_pass && evaluated > 0;
}

}  // namespace pipecrawl
