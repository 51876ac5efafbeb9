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
#ifndef RCE_ADVERSARIAL_HPP
#define RCE_ADVERSARIAL_HPP

#include <string>
#include <vector>

#include "rce/formulations.hpp"
#include "rce/model.hpp"

namespace rce {

/**
 * Adversarial subproblem outcome: the largest achievable deficit
 * max_{s in S} (tau - h~(x+s)) together with an attaining scenario.
 * violation <= 0 certifies the point at this radius (up to epsilon).
 * The returned scenario always satisfies ||s|| <= rho + 1e-9.
 */
struct ApOutcome {
  double violation = 0.0;
  Vector scenario;
  int witness_leaf = -1;  // tree path: id of the deepest-reached negative leaf
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;
};

/** Closed-form linear adversary: s* = -rho * argmax of the dual norm. */
ApOutcome ap_linear(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                    const EngineConfig& cfg);

/**
 * Tree adversary via the Lipschitz surrogate: one LP per negative leaf
 * maximizing the minimum halfspace slack reachable from x within S;
 * the best leaf wins (ties to the lowest leaf id).
 */
ApOutcome ap_tree(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                  const EngineConfig& cfg);

/**
 * Ensemble adversary: a single MILP choosing one leaf per tree whose
 * combined score falls below tau, maximizing the minimum active slack.
 * Reduces to ap_tree for single-tree ensembles.
 */
ApOutcome ap_ensemble(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                      const EngineConfig& cfg);

/** Exact ReLU adversary: MILP minimizing the network score over x+S. */
ApOutcome ap_relu(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                  const EngineConfig& cfg);

/** Kind dispatch over the ap_* functions. */
ApOutcome adversarial_problem(const TrainedModel& model, const Vector& x,
                              const UncertaintySet& set, const EngineConfig& cfg);

/**
 * Exact robustness radius: the distance (in the given norm) from x to the
 * model's negative region, with strict halfspaces relaxed by strict_eps.
 * Not clipped at the feature box. Precondition: x classifies +1
 * (InputError otherwise).
 */
double robustness_radius(const TrainedModel& model, const Vector& x, SetNorm norm,
                         const EngineConfig& cfg);

}  // namespace rce

#endif  // RCE_ADVERSARIAL_HPP
