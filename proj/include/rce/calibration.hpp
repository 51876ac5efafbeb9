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
#ifndef RCE_CALIBRATION_HPP
#define RCE_CALIBRATION_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rce/engine.hpp"
#include "rce/model.hpp"

namespace rce {

/**
 * Relates ball radius rho, per-coordinate Gaussian noise scale sigma, and
 * the probability alpha that a N(0, sigma^2 I_k) draw lands inside the
 * ball. Exactly one of alpha/rho/sigma is left empty and gets computed:
 *   l2:   alpha = F_chi2_k(rho^2 / sigma^2)
 *   linf: alpha = (2 Phi(rho/sigma) - 1)^k
 */
struct CalibrationQuery {
  SetNorm norm = SetNorm::l2;
  int k = 1;
  std::optional<double> alpha, rho, sigma;
};

/** Fills the missing field; InputError unless exactly one is missing or out of domain. */
CalibrationQuery calibrate(CalibrationQuery q);

/**
 * The coverage statement alpha makes is conservative: it bounds only the
 * chance that the realized perturbation falls inside the ball, saying
 * nothing about where the ball sits relative to the decision boundary.
 */
std::string calibration_caveat();

struct ParetoPoint {
  double rho = 0.0;
  double distance = 0.0;
  double wall_time_ms = 0.0;
  CeStatus status = CeStatus::infeasible;
};

/**
 * Robustness/cost trade-off curve: one engine run per grid radius, in
 * grid order. Distances are nondecreasing in rho for converged entries.
 */
std::vector<ParetoPoint> pareto_front(const TrainedModel& model, const Vector& factual,
                                      const std::vector<double>& rho_grid,
                                      const DistanceSpec& dist, SetNorm norm,
                                      const EngineConfig& cfg = {});

/** CSV with header rho,distance,wall_time_ms,status. */
void write_pareto_csv(const std::vector<ParetoPoint>& points, std::ostream& out);

}  // namespace rce

#endif  // RCE_CALIBRATION_HPP
