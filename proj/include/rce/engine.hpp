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
#ifndef RCE_ENGINE_HPP
#define RCE_ENGINE_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rce/adversarial.hpp"
#include "rce/formulations.hpp"
#include "rce/model.hpp"

namespace rce {

/** One master/adversary round. scenario_added is absent on the final round. */
struct IterationRecord {
  int index = 0;  // 1-based
  double mp_objective = 0.0;
  double mp_wall_time_s = 0.0;
  double ap_violation = 0.0;
  double ap_wall_time_s = 0.0;
  std::optional<Vector> scenario_added;
  std::optional<double> rho_bar;
};

enum class CeStatus : int { converged, time_limit, infeasible };

const char* to_string(CeStatus s);

struct Incumbent {
  Vector point;
  double distance = 0.0;
  std::optional<double> rho_bar;
};

/**
 * Robust counterfactual result. On converged: the point's class is +1 for
 * every perturbation in S up to epsilon, and rho_certified >= rho - 1e-6.
 * On infeasible: no robust counterfactual exists in the feature box at
 * this radius; point is empty. On time_limit: best incumbent so far.
 */
struct RceResult {
  CeStatus status = CeStatus::infeasible;
  Vector point;
  double distance = 0.0;
  double rho_requested = 0.0;
  double rho_certified = 0.0;
  std::vector<IterationRecord> trace;
  std::vector<Incumbent> incumbents;
  std::vector<std::string> warnings;
};

/**
 * Scenario cutting-plane loop: alternate the master problem over the
 * accumulated scenario set (starting from {0}) with the adversarial
 * subproblem, adding the worst scenario until its violation is <= epsilon.
 * Linear models short-circuit to robust_linear_ce unless
 * cfg.linear_iterative is set. The factual must classify -1 (InputError),
 * unless cfg.negate_on_positive_factual flips the model first.
 */
RceResult solve_robust_ce(const TrainedModel& model, const Vector& factual,
                          const UncertaintySet& set, const DistanceSpec& dist,
                          const EngineConfig& cfg = {});

/**
 * One-shot heuristic: per positive leaf, tighten each halfspace by
 * rho * ||a||_* and solve the distance LP inside the tightened region;
 * the best leaf wins. Ensembles use one MILP with per-tree leaf choices.
 * Sound but conservative: a ball straddling several positive leaves is
 * never found. Trace length is always 1.
 */
RceResult solve_heuristic(const TrainedModel& model, const Vector& factual,
                          const UncertaintySet& set, const DistanceSpec& dist,
                          const EngineConfig& cfg = {});

/** One JSON object per iteration, newline-delimited. */
void write_trace_jsonl(const RceResult& result, std::ostream& out);

}  // namespace rce

#endif  // RCE_ENGINE_HPP
