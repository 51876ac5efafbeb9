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
#ifndef RCE_FORMULATIONS_HPP
#define RCE_FORMULATIONS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "rce/milp.hpp"
#include "rce/model.hpp"

namespace rce {

/**
 * Right-hand side for an indicator row a^T x + M b <= rhs that must read
 * a^T x <= bound exactly once the binary b is pinned at 1. Adding M rounds
 * the bound at ulp(M), so the sum is nudged down until subtracting M lands
 * at or below bound again; the feasible side only ever shrinks, keeping
 * certificates conservative. Requires |bound| < M, which in turn makes
 * rhs - M exact (Sterbenz).
 */
inline double pinned_big_m_rhs(double bound, double big_m) {
  double rhs = bound + big_m;
  while (rhs - big_m > bound) {
    rhs = std::nextafter(rhs, -std::numeric_limits<double>::infinity());
  }
  return rhs;
}


/** Perturbation ball S = { s : ||s|| <= rho } in the chosen norm. */
struct UncertaintySet {
  SetNorm norm = SetNorm::linf;
  double rho = 0.0;
};

/** Counterfactual distance d(x, factual); empty weights mean all ones. */
struct DistanceSpec {
  DistNorm norm = DistNorm::l1;
  Vector weights;
};

/** Finite scenario list; the zero scenario is always present and first. */
struct ScenarioSet {
  std::vector<Vector> scenarios;

  static ScenarioSet zero(std::size_t dim);
  /** Validates ||s|| <= rho + 1e-9 against the set before appending. */
  void add(const Vector& s, const UncertaintySet& set);
  std::size_t size() const { return scenarios.size(); }
};

struct EngineConfig {
  double epsilon = 1e-7;       // adversarial violation tolerance
  double big_m_tree = 1e3;     // leaf-activation big-M
  double big_m_nn_lb = 100.0;  // ReLU lower-side big-M
  double big_m_nn_ub = 100.0;  // ReLU upper-side big-M
  double strict_eps = 1e-6;    // closure margin for strict halfspaces
  double time_limit_s = 1000.0;

  bool scenarios_within_box = false;      // intersect S with the feature box
  bool negate_on_positive_factual = false;
  bool linear_iterative = false;          // run the cutting-plane loop on linear models
  bool track_incumbent_radius = true;     // per-iteration exact radius (trees/ensembles)
  milp::SolverConfig solver;
};

/**
 * Master problem: min d(x, factual) s.t. x classifies +1 at x+s for every
 * scenario s. Grows by append_scenario; never rebuilt from scratch.
 */
struct MpProgram {
  milp::MilpModel model;
  std::vector<int> x_vars;
  int num_scenarios = 0;
};

/**
 * Tree master problem. Leaves with weight < tau are pruned together with
 * the score row; each scenario contributes one activation binary per
 * positive leaf, big-M containment rows, and an exactly-one row.
 */
MpProgram build_mp_tree(const TrainedModel& model, const Vector& factual,
                        const ScenarioSet& scenarios, const DistanceSpec& dist,
                        const EngineConfig& cfg);

/**
 * Ensemble master problem: per-tree copies of the leaf encoding over all
 * leaves (no pruning), plus the averaged score row per scenario.
 */
MpProgram build_mp_ensemble(const TrainedModel& model, const Vector& factual,
                            const ScenarioSet& scenarios, const DistanceSpec& dist,
                            const EngineConfig& cfg);

/** ReLU master problem: big-M activation encoding per scenario. */
MpProgram build_mp_relu(const TrainedModel& model, const Vector& factual,
                        const ScenarioSet& scenarios, const DistanceSpec& dist,
                        const EngineConfig& cfg);

/** Linear master problem (one row per scenario); used by the iterative path. */
MpProgram build_mp_linear(const TrainedModel& model, const Vector& factual,
                          const ScenarioSet& scenarios, const DistanceSpec& dist,
                          const EngineConfig& cfg);

/** Kind dispatch over the build_mp_* functions. */
MpProgram build_mp(const TrainedModel& model, const Vector& factual,
                   const ScenarioSet& scenarios, const DistanceSpec& dist,
                   const EngineConfig& cfg);

/** Appends one scenario's variables and rows to an existing program. */
void append_scenario(MpProgram& mp, const TrainedModel& model, const Vector& s,
                     const EngineConfig& cfg);

struct LinearCeResult {
  bool feasible = false;
  Vector point;
  double distance = 0.0;
};

/**
 * Closed-form robust counterfactual for linear models: one LP with the
 * dual-norm-tightened threshold beta^T x + beta0 >= tau + rho * ||beta||_*,
 * where the dual norm runs over the mutable coordinates only.
 */
LinearCeResult robust_linear_ce(const TrainedModel& model, const Vector& factual,
                                const UncertaintySet& set, const DistanceSpec& dist,
                                const EngineConfig& cfg);

}  // namespace rce

#endif  // RCE_FORMULATIONS_HPP
