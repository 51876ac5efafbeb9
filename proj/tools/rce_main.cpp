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
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rce/adversarial.hpp"
#include "rce/calibration.hpp"
#include "rce/engine.hpp"
#include "rce/model_io.hpp"
#include "rce/oracle.hpp"
#include "rce/types.hpp"

namespace {

using nlohmann::json;

rce::SetNorm parse_set_norm(const std::string& s) {
  if (s == "linf") return rce::SetNorm::linf;
  if (s == "l2") return rce::SetNorm::l2;
  throw rce::InputError("unknown perturbation norm '" + s + "' (expected linf or l2)");
}

rce::DistNorm parse_dist_norm(const std::string& s) {
  if (s == "l1") return rce::DistNorm::l1;
  if (s == "linf") return rce::DistNorm::linf;
  throw rce::InputError("unknown distance norm '" + s + "' (expected l1 or linf)");
}

/** Factual/point flag: a file path (CSV row or JSON array) or an inline comma list. */
rce::Vector parse_point(const std::string& spec) {
  std::string text = spec;
  {
    std::ifstream f(spec);
    if (f.good()) {
      std::stringstream ss;
      ss << f.rdbuf();
      text = ss.str();
    }
  }
  const auto from = text.find_first_not_of(" \t\r\n");
  if (from == std::string::npos) throw rce::InputError("empty point '" + spec + "'");
  const auto to = text.find_last_not_of(" \t\r\n");
  text = text.substr(from, to - from + 1);

  rce::Vector out;
  if (text.front() == '[') {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array())
      throw rce::InputError("point '" + spec + "' is not a JSON array of numbers");
    for (const auto& v : j) {
      if (!v.is_number()) throw rce::InputError("point '" + spec + "' holds a non-numeric entry");
      out.push_back(v.get<double>());
    }
  } else {
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        out.push_back(v);
      } catch (const std::exception&) {
        throw rce::InputError("cannot parse '" + cell + "' as a number in point '" + spec + "'");
      }
    }
  }
  if (out.empty()) throw rce::InputError("point '" + spec + "' holds no coordinates");
  return out;
}

double env_time_limit(double flag_value) {
  const char* env = std::getenv("RCE_TIME_LIMIT");
  if (env == nullptr) return flag_value;
  try {
    std::size_t used = 0;
    const double v = std::stod(env, &used);
    if (used != std::string(env).size() || !(v > 0.0))
      throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw rce::InputError(std::string("RCE_TIME_LIMIT is not a positive number: '") + env + "'");
  }
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // JSON has no infinity; null marks an unbounded certificate
}

void mark_immutable(rce::TrainedModel& model, const std::vector<int>& indices) {
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= model.space.dim())
      throw rce::InputError("--immutable index " + std::to_string(i) + " is out of range");
    model.space.immutable[static_cast<std::size_t>(i)] = 1;
  }
}

void print_table(const json& j, std::ostream& out) {
  for (const auto& [key, value] : j.items()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%-14s", key.c_str());
    out << buf << " " << value.dump() << "\n";
  }
}

void emit(const json& j, bool pretty, std::ostream& out) {
  if (pretty)
    print_table(j, out);
  else
    out << j.dump() << "\n";
}

struct ExplainArgs {
  std::string model_path, factual, norm = "linf", distance = "l1", mode = "exact";
  std::string trace_path, output = "json";
  double rho = 0.0, epsilon = 1e-7, time_limit = 1000.0;
  std::vector<int> immutable;
  bool pretty = false;
};

int cmd_explain(const ExplainArgs& args) {
  rce::TrainedModel model = rce::load_model(args.model_path);
  mark_immutable(model, args.immutable);
  const rce::Vector factual = parse_point(args.factual);
  const rce::UncertaintySet set{parse_set_norm(args.norm), args.rho};
  const rce::DistanceSpec dist{parse_dist_norm(args.distance), {}};
  rce::EngineConfig cfg;
  cfg.epsilon = args.epsilon;
  cfg.time_limit_s = env_time_limit(args.time_limit);

  rce::RceResult res;
  if (args.mode == "exact")
    res = rce::solve_robust_ce(model, factual, set, dist, cfg);
  else if (args.mode == "heuristic")
    res = rce::solve_heuristic(model, factual, set, dist, cfg);
  else
    throw rce::InputError("unknown mode '" + args.mode + "' (expected exact or heuristic)");

  if (!args.trace_path.empty()) {
    std::ofstream f(args.trace_path);
    if (!f) throw rce::InputError("cannot open trace file '" + args.trace_path + "'");
    rce::write_trace_jsonl(res, f);
  }

  if (args.output == "csv") {
    std::ostringstream header, row;
    header << "status,distance,rho_certified,iterations";
    row.precision(17);
    row << rce::to_string(res.status) << "," << res.distance << "," << res.rho_certified << ","
        << res.trace.size();
    for (std::size_t i = 0; i < res.point.size(); ++i) {
      header << ",x" << i;
      row << "," << res.point[i];
    }
    std::cout << header.str() << "\n" << row.str() << "\n";
  } else if (args.output == "json") {
    json j;
    j["status"] = rce::to_string(res.status);
    j["point"] = res.point;
    j["distance"] = res.distance;
    j["rho_requested"] = res.rho_requested;
    j["rho_certified"] = finite_or_null(res.rho_certified);
    j["iterations"] = res.trace.size();
    j["warnings"] = res.warnings;
    emit(j, args.pretty, std::cout);
  } else {
    throw rce::InputError("unknown output format '" + args.output + "' (expected json or csv)");
  }
  switch (res.status) {
    case rce::CeStatus::converged: return 0;
    case rce::CeStatus::time_limit: return 2;
    case rce::CeStatus::infeasible: return 3;
  }
  return 1;
}

struct VerifyArgs {
  std::string model_path, point, norm = "linf";
  double rho = 0.0;
  int samples = 10000;
  std::uint64_t seed = 2026;
  bool pretty = false;
};

int cmd_verify(const VerifyArgs& args) {
  const rce::TrainedModel model = rce::load_model(args.model_path);
  const rce::Vector point = parse_point(args.point);
  const rce::UncertaintySet set{parse_set_norm(args.norm), args.rho};
  rce::EngineConfig cfg;
  cfg.time_limit_s = env_time_limit(cfg.time_limit_s);

  const bool valid = rce::raw_class(model, point) == 1;
  double rho_bar = 0.0;
  bool robust = false;
  if (valid) {
    rho_bar = rce::robustness_radius(model, point, set.norm, cfg);
    robust = rho_bar >= set.rho;
  }
  const rce::oracle::AuditReport audit =
      rce::oracle::sample_audit(model, point, set, args.samples, args.seed);

  json j;
  j["valid"] = valid;
  j["robust"] = robust;
  j["rho"] = set.rho;
  j["rho_certified"] = valid ? finite_or_null(rho_bar) : json(nullptr);
  j["audit"] = {{"all_valid", audit.all_valid},
                {"min_score", audit.min_score},
                {"samples", audit.samples},
                {"worst_scenario", audit.worst_scenario}};
  emit(j, args.pretty, std::cout);
  return 0;
}

struct CalibrateArgs {
  std::string norm = "l2";
  int k = 1;
  std::optional<double> alpha, rho, sigma;
  bool pretty = false;
};

int cmd_calibrate(const CalibrateArgs& args) {
  rce::CalibrationQuery q;
  q.norm = parse_set_norm(args.norm);
  q.k = args.k;
  q.alpha = args.alpha;
  q.rho = args.rho;
  q.sigma = args.sigma;
  const rce::CalibrationQuery done = rce::calibrate(q);
  json j;
  j["norm"] = args.norm;
  j["k"] = done.k;
  j["alpha"] = *done.alpha;
  j["rho"] = *done.rho;
  j["sigma"] = *done.sigma;
  j["caveat"] = rce::calibration_caveat();
  emit(j, args.pretty, std::cout);
  return 0;
}

struct ParetoArgs {
  std::string model_path, factual, norm = "linf", distance = "l1", out_path;
  std::vector<double> rhos;
  double time_limit = 1000.0;
};

int cmd_pareto(const ParetoArgs& args) {
  const rce::TrainedModel model = rce::load_model(args.model_path);
  const rce::Vector factual = parse_point(args.factual);
  const rce::DistanceSpec dist{parse_dist_norm(args.distance), {}};
  rce::EngineConfig cfg;
  cfg.time_limit_s = env_time_limit(args.time_limit);
  const auto points =
      rce::pareto_front(model, factual, args.rhos, dist, parse_set_norm(args.norm), cfg);
  if (args.out_path.empty()) {
    rce::write_pareto_csv(points, std::cout);
  } else {
    std::ofstream f(args.out_path);
    if (!f) throw rce::InputError("cannot open output file '" + args.out_path + "'");
    rce::write_pareto_csv(points, f);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust counterfactual explanations for linear, tree, ensemble, and ReLU models"};
  app.require_subcommand(1);

  ExplainArgs ex;
  CLI::App* explain = app.add_subcommand("explain", "Compute a robust counterfactual");
  explain->add_option("--model", ex.model_path, "Model JSON file")->required();
  explain->add_option("--factual", ex.factual, "Factual point: file or inline comma list")->required();
  explain->add_option("--rho", ex.rho, "Perturbation ball radius")->required();
  explain->add_option("--norm", ex.norm, "Perturbation norm: linf or l2");
  explain->add_option("--distance", ex.distance, "Counterfactual distance: l1 or linf");
  explain->add_option("--mode", ex.mode, "exact or heuristic");
  explain->add_option("--epsilon", ex.epsilon, "Adversarial violation tolerance");
  explain->add_option("--time-limit", ex.time_limit, "Wall-clock budget in seconds");
  explain->add_option("--trace", ex.trace_path, "Write the iteration trace to this JSONL file");
  explain->add_option("--immutable", ex.immutable, "Extra immutable feature indices")->delimiter(',');
  explain->add_option("--output", ex.output, "json or csv");
  explain->add_flag("--pretty", ex.pretty, "Human-readable table instead of JSON");

  VerifyArgs ve;
  CLI::App* verify = app.add_subcommand("verify", "Audit the robustness of a point");
  verify->add_option("--model", ve.model_path, "Model JSON file")->required();
  verify->add_option("--point", ve.point, "Point: file or inline comma list")->required();
  verify->add_option("--rho", ve.rho, "Perturbation ball radius")->required();
  verify->add_option("--norm", ve.norm, "Perturbation norm: linf or l2");
  verify->add_option("--samples", ve.samples, "Audit sample count");
  verify->add_option("--seed", ve.seed, "Audit RNG seed");
  verify->add_flag("--pretty", ve.pretty, "Human-readable table instead of JSON");

  CalibrateArgs ca;
  double ca_alpha = 0.0, ca_rho = 0.0, ca_sigma = 0.0;
  CLI::App* calibrate = app.add_subcommand("calibrate", "Relate rho, alpha, and sigma");
  calibrate->add_option("--norm", ca.norm, "Perturbation norm: linf or l2");
  calibrate->add_option("--k", ca.k, "Feature dimension");
  CLI::Option* oa = calibrate->add_option("--alpha", ca_alpha, "Coverage probability");
  CLI::Option* orho = calibrate->add_option("--rho", ca_rho, "Ball radius");
  CLI::Option* osigma = calibrate->add_option("--sigma", ca_sigma, "Noise scale");
  calibrate->add_flag("--pretty", ca.pretty, "Human-readable table instead of JSON");

  ParetoArgs pa;
  CLI::App* pareto = app.add_subcommand("pareto", "Distance/radius trade-off sweep");
  pareto->add_option("--model", pa.model_path, "Model JSON file")->required();
  pareto->add_option("--factual", pa.factual, "Factual point: file or inline comma list")->required();
  pareto->add_option("--rhos", pa.rhos, "Ascending comma list of radii")->required()->delimiter(',');
  pareto->add_option("--norm", pa.norm, "Perturbation norm: linf or l2");
  pareto->add_option("--distance", pa.distance, "Counterfactual distance: l1 or linf");
  pareto->add_option("--out", pa.out_path, "CSV output path (stdout when omitted)");
  pareto->add_option("--time-limit", pa.time_limit, "Per-solve wall-clock budget in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (explain->parsed()) return cmd_explain(ex);
    if (verify->parsed()) return cmd_verify(ve);
    if (calibrate->parsed()) {
      if (oa->count() > 0) ca.alpha = ca_alpha;
      if (orho->count() > 0) ca.rho = ca_rho;
      if (osigma->count() > 0) ca.sigma = ca_sigma;
      return cmd_calibrate(ca);
    }
    if (pareto->parsed()) return cmd_pareto(pa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
