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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pipecrawl/mission.hpp"
#include "pipecrawl/report.hpp"
#include "pipecrawl/scenario_gen.hpp"
#include "pipecrawl/verify.hpp"
#include "pipecrawl/world.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pipecrawl;

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            std::int64_t seed_override, bool quiet) {
  Scenario scenario = load_scenario_file(scenario_path);
  if (seed_override >= 0)
    scenario.seed = static_cast<std::uint64_t>(seed_override);
  const std::string digest = digest_hex(scenario_to_json(scenario));

  fs::create_directories(out_dir);
  const MissionResult result = run_mission(scenario);

  write_report_json(result, digest, (fs::path(out_dir) / "report.json").string());
  write_per_foot_csv(result, (fs::path(out_dir) / "per_foot.csv").string());
  write_run_log_csv(result, (fs::path(out_dir) / "run_log.csv").string());

  if (!quiet) {
    std::cout << scenario.name << ": " << to_string(result.final_state);
    if (result.abort_reason != AbortReason::kNone)
      std::cout << " (abort: " << to_string(result.abort_reason) << ")";
    if (!result.deploy_error.empty())
      std::cout << " (deploy: " << result.deploy_error << ")";
    std::cout << ", " << result.ticks << " ticks, reports in " << out_dir
              << std::endl;
  }
  return result.exit_code;
}

int cmd_gen_suite(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  const SuiteSpec spec = load_suite_spec(ss.str());
  const std::size_t count = gen_suite(spec).size();
  write_suite(spec, out_dir);
  std::cout << "wrote " << count << " scenarios + manifest.json to " << out_dir
            << std::endl;
  return 0;
}

int cmd_verify(const std::vector<std::string>& dirs, bool full, int threads) {
  VerifyOptions opts;
  opts.threads = thread_cap_from_env(threads);
  opts.progress = &std::cerr;
  const std::vector<CriterionResult> results =
      full ? run_acceptance(opts) : verify_report_dirs(dirs, opts);
  return print_criteria(results, std::cout) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pipecrawl: deterministic in-pipe inspection simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out";
  std::int64_t seed_override = -1;
  bool quiet = false;
  CLI::App* run = app.add_subcommand("run", "run one scenario end to end");
  run->add_option("scenario", scenario_path, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (report.json, CSVs)");
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_flag("--quiet", quiet, "suppress the summary line");

  std::string spec_path, suite_dir = "suite";
  CLI::App* gen = app.add_subcommand("gen-suite",
                                     "generate a randomized scenario suite");
  gen->add_option("spec", spec_path, "suite spec JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--out", suite_dir, "directory for scenarios + manifest");

  std::vector<std::string> verify_dirs;
  bool full = false;
  int threads = 1;
  CLI::App* ver = app.add_subcommand("verify",
                                     "evaluate acceptance criteria");
  ver->add_option("dirs", verify_dirs,
                  "directories holding report.json bundles");
  ver->add_flag("--full", full,
                "run the complete in-process acceptance battery");
  ver->add_option("--threads", threads,
                  "worker threads (PIPECRAWL_THREADS overrides)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, out_dir, seed_override, quiet);
    if (gen->parsed()) return cmd_gen_suite(spec_path, suite_dir);
    if (ver->parsed()) {
      if (!full && verify_dirs.empty()) {
        std::cerr << "verify: give report directories or --full" << std::endl;
        return 1;
      }
      return cmd_verify(verify_dirs, full, threads);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
