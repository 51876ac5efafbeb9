/*
 * Copyright 2026 RCE Contributors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fixture_util.hpp"
#include "json.hpp"

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/** Runs the installed binary through the shell; env goes in front verbatim. */
CliRun run_cli(const std::string& args, const std::string& env = "") {
  static int serial = 0;
  const std::string err_path = "/tmp/rce_cli_stderr_" + std::to_string(serial++) + ".txt";
  std::string cmd = env.empty() ? "" : env + " ";
  cmd += std::string(RCE_CLI_PATH) + " " + args + " 2>" + err_path;

  CliRun run;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) run.out.append(buf, got);
  const int status = ::pclose(pipe);
  run.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  run.err = slurp(err_path);
  std::remove(err_path.c_str());
  return run;
}

std::string model(const std::string& name) { return rce_tests::fixture_path(name); }

}  // namespace

TEST_CASE("cli: explain emits the machine contract and exit code 0") {
  const auto run = run_cli("explain --model " + model("step_tree.json") +
                           " --factual 0,2 --rho 1 --norm linf");
  REQUIRE(run.code == 0);
  const auto j = nlohmann::json::parse(run.out);
  CHECK(j["status"] == "converged");
  CHECK(std::abs(j["distance"].get<double>() - 2.5) <= 1e-6);
  CHECK(j["iterations"].get<int>() == 2);
  CHECK(j["rho_certified"].get<double>() >= 1.0 - 1e-6);
  REQUIRE(j["point"].is_array());
  CHECK(j["point"].size() == 2);
}

TEST_CASE("cli: explain csv output carries one header and one row") {
  const auto run = run_cli("explain --model " + model("step_tree.json") +
                           " --factual 0,2 --rho 1 --output csv");
  REQUIRE(run.code == 0);
  std::istringstream lines(run.out);
  std::string header, row, extra;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row));
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(header == "status,distance,rho_certified,iterations,x0,x1");
  CHECK(row.find("converged,2.5") == 0);
}

TEST_CASE("cli: infeasible runs exit with code 3") {
  const auto run = run_cli("explain --model " + model("thin_strips_tree.json") +
                           " --factual 0.9,0.5 --rho 0.1 --mode heuristic");
  CHECK(run.code == 3);
  const auto j = nlohmann::json::parse(run.out);
  CHECK(j["status"] == "infeasible");
  CHECK(j["point"].empty());
}

TEST_CASE("cli: the time limit environment override wins and exits 2") {
  const auto run = run_cli("explain --model " + model("depth3_tree.json") +
                               " --factual 0.9,0.1 --rho 0.1 --time-limit 100",
                           "RCE_TIME_LIMIT=0.000000001");
  CHECK(run.code == 2);
  const auto j = nlohmann::json::parse(run.out);
  CHECK(j["status"] == "time_limit");
}

TEST_CASE("cli: usage problems exit with code 1") {
  CHECK(run_cli("explain --model " + model("step_tree.json")).code == 1);  // missing flags
  CHECK(run_cli("explain --model /nonexistent.json --factual 0,2 --rho 1").code == 1);
  CHECK(run_cli("explain --model " + model("step_tree.json") +
                " --factual 0,2 --rho 1 --norm l7")
            .code == 1);
  CHECK(run_cli("nonsense").code == 1);
}

TEST_CASE("cli: schema diagnostics name the offending field") {
  const std::string path = "/tmp/rce_cli_bad_model.json";
  {
    std::ofstream f(path);
    f << R"({"version": 1, "kind": "linear", "tau": 0.0,
            "space": {"dim": 2, "lower": [0, 0], "upper": [1, 1]},
            "params": {"beta0": -1.0}})";
  }
  const auto run = run_cli("explain --model " + path + " --factual 0,0 --rho 0.1");
  CHECK(run.code == 1);
  CHECK(run.err.find("$.params.beta") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("cli: explain then verify round trips through the audit") {
  const auto explain = run_cli("explain --model " + model("straddle_tree.json") +
                               " --factual 0.9,0.5 --rho 0.2 --norm linf");
  REQUIRE(explain.code == 0);
  const auto ej = nlohmann::json::parse(explain.out);
  std::ostringstream point;
  point.precision(17);
  point << ej["point"][0].get<double>() << "," << ej["point"][1].get<double>();

  const auto verify = run_cli("verify --model " + model("straddle_tree.json") + " --point " +
                              point.str() + " --rho 0.2 --samples 2000 --seed 42");
  REQUIRE(verify.code == 0);
  const auto vj = nlohmann::json::parse(verify.out);
  CHECK(vj["valid"] == true);
  CHECK(vj["robust"] == true);
  CHECK(vj["audit"]["all_valid"] == true);
  CHECK(vj["audit"]["samples"] == 2000);
}

TEST_CASE("cli: verifying a negative point reports valid false with exit 0") {
  const auto run = run_cli("verify --model " + model("step_tree.json") +
                           " --point 0,2 --rho 0.1 --samples 500 --seed 1");
  REQUIRE(run.code == 0);
  const auto j = nlohmann::json::parse(run.out);
  CHECK(j["valid"] == false);
  CHECK(j["robust"] == false);
  CHECK(j["rho_certified"].is_null());
}

TEST_CASE("cli: calibrate completes the missing field and prints the caveat") {
  const auto run = run_cli("calibrate --norm linf --k 1 --rho 1.959964 --sigma 1");
  REQUIRE(run.code == 0);
  const auto j = nlohmann::json::parse(run.out);
  CHECK(std::abs(j["alpha"].get<double>() - 0.95) <= 1e-6);
  CHECK(j["caveat"].get<std::string>().find("Conservative") != std::string::npos);
}

TEST_CASE("cli: malformed calibration queries exit with code 1") {
  CHECK(run_cli("calibrate --norm l2 --k 2 --alpha 0.9").code == 1);          // two unknowns
  CHECK(run_cli("calibrate --norm l2 --k 2 --alpha 2 --sigma 1").code == 1);  // out of domain
}

TEST_CASE("cli: pareto writes the documented csv") {
  const std::string out_path = "/tmp/rce_cli_pareto.csv";
  const auto run = run_cli("pareto --model " + model("step_tree.json") +
                           " --factual 0,2 --rhos 0,1 --out " + out_path);
  REQUIRE(run.code == 0);
  std::istringstream lines(slurp(out_path));
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "rho,distance,wall_time_ms,status");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 2);
  std::remove(out_path.c_str());
}

TEST_CASE("cli: trace files hold one json object per iteration") {
  const std::string trace_path = "/tmp/rce_cli_trace.jsonl";
  const auto run = run_cli("explain --model " + model("step_tree.json") +
                           " --factual 0,2 --rho 1 --trace " + trace_path);
  REQUIRE(run.code == 0);
  std::istringstream lines(slurp(trace_path));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["iteration"] == ++count);
  }
  CHECK(count == 2);
  std::remove(trace_path.c_str());
}

TEST_CASE("cli: immutable indices pin coordinates from the command line") {
  const auto run = run_cli("explain --model " + model("depth3_tree.json") +
                           " --factual 0.9,0.1 --rho 0.05 --immutable 1");
  REQUIRE(run.code == 0);
  const auto j = nlohmann::json::parse(run.out);
  CHECK(j["point"][1].get<double>() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(std::abs(j["distance"].get<double>() - 0.75) <= 1e-6);
}

TEST_CASE("cli: pretty output renders a table instead of json") {
  const auto run = run_cli("explain --model " + model("step_tree.json") +
                           " --factual 0,2 --rho 1 --pretty");
  REQUIRE(run.code == 0);
  CHECK(run.out.find("status") != std::string::npos);
  CHECK(run.out.find("converged") != std::string::npos);
  CHECK_FALSE(nlohmann::json::accept(run.out));
}

TEST_CASE("cli: identical invocations are byte-identical") {
  const std::string args = "explain --model " + model("fold_net.json") +
                           " --factual 0.2,0.1 --rho 0.05 --norm l2";
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
}
