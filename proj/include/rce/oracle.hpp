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
#ifndef RCE_ORACLE_HPP
#define RCE_ORACLE_HPP

#include <cstdint>

#include "rce/formulations.hpp"
#include "rce/milp.hpp"
#include "rce/model.hpp"

namespace rce::oracle {

/**
 * Brute-force reference for solve_milp: one LP per binary assignment
 * (2^b solves, refused above 12 binaries). Deliberately avoids the
 * branch-and-bound path; shares only the dense LP kernel.
 */
milp::SolveOutcome enumerate_milp(const milp::MilpModel& model,
                                  const milp::SolverConfig& cfg = {});

/**
 * Randomized robustness audit at x: half the draws uniform in S, half on
 * the boundary ||s|| = rho, immutable coordinates zeroed. Evaluates the
 * exact (unclamped) score at x+s. Fixed seed => reproducible verdict.
 */
struct AuditReport {
  bool all_valid = false;
  double min_score = 0.0;
  Vector worst_scenario;
  int samples = 0;
};

AuditReport sample_audit(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                         int num_samples, std::uint64_t seed);

/**
 * Exhaustive grid reference for the engine (dimension <= 3, InputError
 * otherwise). Scans feature-box grid points in order of increasing
 * distance from the factual and returns the first (hence cheapest) point
 * whose whole perturbation ball stays positive. Trees use an exact
 * point-to-leaf distance; ensembles and networks use a grid distance
 * transform, so results carry up to one grid cell of slack.
 */
struct GridCeResult {
  bool found = false;
  Vector point;
  double distance = 0.0;
};

GridCeResult grid_ce(const TrainedModel& model, const Vector& factual, const UncertaintySet& set,
                     const DistanceSpec& dist, double resolution);

}  // namespace rce::oracle

#endif  // RCE_ORACLE_HPP
