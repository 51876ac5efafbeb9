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
#include "rce/calibration.hpp"

#include <chrono>
#include <cmath>
#include <ios>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rce/special_functions.hpp"
#include "rce/types.hpp"

namespace rce {
namespace {

/** Ball-coverage probability for N(0, sigma^2 I_k) at radius rho. */
double coverage(SetNorm norm, int k, double rho, double sigma) {
  if (rho == 0.0) return 0.0;
  const double r = rho / sigma;
  if (norm == SetNorm::l2) return stats::chi2_cdf(static_cast<double>(k), r * r);
  return std::pow(2.0 * stats::normal_cdf(r) - 1.0, static_cast<double>(k));
}

/** rho/sigma ratio achieving coverage alpha. */
double inverse_ratio(SetNorm norm, int k, double alpha) {
  if (norm == SetNorm::l2)
    return std::sqrt(stats::chi2_quantile(static_cast<double>(k), alpha));
  return stats::normal_quantile((std::pow(alpha, 1.0 / static_cast<double>(k)) + 1.0) / 2.0);
}

}  // namespace

CalibrationQuery calibrate(CalibrationQuery q) {
  if (q.k < 1) throw InputError("calibrate: k must be a positive integer");
  const int unknowns = static_cast<int>(!q.alpha) + static_cast<int>(!q.rho) +
                       static_cast<int>(!q.sigma);
  if (unknowns != 1)
    throw InputError("calibrate: exactly one of alpha, rho, sigma must be left unknown");
  if (q.alpha && !(*q.alpha > 0.0 && *q.alpha < 1.0))
    throw InputError("calibrate: alpha must lie strictly inside (0, 1)");
  if (q.rho && !(std::isfinite(*q.rho) && *q.rho >= 0.0))
    throw InputError("calibrate: rho must be a nonnegative real");
  if (q.sigma && !(std::isfinite(*q.sigma) && *q.sigma > 0.0))
    throw InputError("calibrate: sigma must be a positive real");

  if (!q.alpha) {
    q.alpha = coverage(q.norm, q.k, *q.rho, *q.sigma);
  } else if (!q.rho) {
    q.rho = *q.sigma * inverse_ratio(q.norm, q.k, *q.alpha);
  } else {
    if (*q.rho == 0.0)
      throw InputError("calibrate: no sigma achieves a positive alpha at rho = 0");
    q.sigma = *q.rho / inverse_ratio(q.norm, q.k, *q.alpha);
  }
  return q;
}

std::string calibration_caveat() {
  return "Conservative guarantee: alpha bounds only the probability that the realized "
         "perturbation falls inside the certified ball; it does not account for where the "
         "ball sits relative to the decision boundary, so the true validity probability "
         "can be higher.";
}

std::vector<ParetoPoint> pareto_front(const TrainedModel& model, const Vector& factual,
                                      const std::vector<double>& rho_grid,
                                      const DistanceSpec& dist, SetNorm norm,
                                      const EngineConfig& cfg) {
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    if (!(std::isfinite(rho_grid[i]) && rho_grid[i] >= 0.0))
      throw InputError("pareto_front: radii must be nonnegative reals");
    if (i > 0 && rho_grid[i] < rho_grid[i - 1])
      throw InputError("pareto_front: the radius grid must be sorted ascending");
  }
  std::vector<ParetoPoint> points;
  points.reserve(rho_grid.size());
  for (double rho : rho_grid) {
    const auto start = std::chrono::steady_clock::now();
    const RceResult run = solve_robust_ce(model, factual, {norm, rho}, dist, cfg);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    ParetoPoint p;
    p.rho = rho;
    p.status = run.status;
    p.wall_time_ms = ms;
    p.distance = run.point.empty() ? std::numeric_limits<double>::quiet_NaN() : run.distance;
    points.push_back(p);
  }
  return points;
}

void write_pareto_csv(const std::vector<ParetoPoint>& points, std::ostream& out) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out.precision(17);
  out << "rho,distance,wall_time_ms,status\n";
  for (const ParetoPoint& p : points) {
    out << p.rho << "," << p.distance << "," << p.wall_time_ms << "," << to_string(p.status)
        << "\n";
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace rce
