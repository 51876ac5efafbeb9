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
#include "rce/formulations.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "rce/types.hpp"

namespace rce {
namespace {

// Interior margin on the network score row, covering forward-pass rounding
// at points that would otherwise sit exactly on the decision threshold.
constexpr double kForwardEvalMargin = 1e-12;

std::string tag(const char* stem, int z) {
  return std::string(stem) + "_z" + std::to_string(z);
}

void append_sparse(std::vector<milp::Term>& row, const std::vector<int>& vars, const Vector& coefs) {
  for (std::size_t i = 0; i < coefs.size(); ++i) {
    if (coefs[i] != 0.0) row.push_back({vars[i], coefs[i]});
  }
}

void check_distance_spec(const DistanceSpec& dist, std::size_t n) {
  if (dist.weights.empty()) return;
  if (dist.weights.size() != n) throw InputError("distance weights dimension mismatch");
  for (double w : dist.weights) {
    if (!std::isfinite(w) || w <= 0.0) throw InputError("distance weights must be positive");
  }
}

double weight_at(const DistanceSpec& dist, std::size_t i) {
  return dist.weights.empty() ? 1.0 : dist.weights[i];
}

/*
 * Registers the counterfactual variables with their box bounds, pins
 * immutable features to the factual by equality rows, and installs the
 * distance objective. l1 uses one |x_i - factual_i| envelope variable per
 * feature; linf uses a single envelope over the weighted deviations.
 */
MpProgram base_program(const TrainedModel& model, const Vector& factual, const DistanceSpec& dist) {
  const FeatureSpace& space = model.space;
  const std::size_t n = space.dim();
  if (factual.size() != n) throw InputError("factual dimension mismatch");
  check_distance_spec(dist, n);

  MpProgram mp;
  mp.x_vars.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    mp.x_vars.push_back(
        mp.model.add_variable("x" + std::to_string(i), space.lower[i], space.upper[i]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!space.immutable[i]) continue;
    mp.model.add_constraint({{mp.x_vars[i], 1.0}}, milp::Sense::eq, factual[i],
                            "fix_" + std::to_string(i));
  }

  std::vector<milp::Term> objective;
  if (dist.norm == DistNorm::l1) {
    for (std::size_t i = 0; i < n; ++i) {
      const int t =
          mp.model.add_variable("t" + std::to_string(i), 0.0, space.upper[i] - space.lower[i]);
      mp.model.add_constraint({{mp.x_vars[i], 1.0}, {t, -1.0}}, milp::Sense::le, factual[i],
                              "dist_pos_" + std::to_string(i));
      mp.model.add_constraint({{mp.x_vars[i], -1.0}, {t, -1.0}}, milp::Sense::le, -factual[i],
                              "dist_neg_" + std::to_string(i));
      objective.push_back({t, weight_at(dist, i)});
    }
  } else {
    double reach = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      reach = std::max(reach, weight_at(dist, i) * (space.upper[i] - space.lower[i]));
    }
    const int t = mp.model.add_variable("t", 0.0, reach);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weight_at(dist, i);
      mp.model.add_constraint({{mp.x_vars[i], w}, {t, -1.0}}, milp::Sense::le, w * factual[i],
                              "dist_pos_" + std::to_string(i));
      mp.model.add_constraint({{mp.x_vars[i], -w}, {t, -1.0}}, milp::Sense::le, -w * factual[i],
                              "dist_neg_" + std::to_string(i));
    }
    objective.push_back({t, 1.0});
  }
  mp.model.set_objective(milp::ObjSense::minimize, std::move(objective));
  return mp;
}

/*
 * Containment rows for one leaf under scenario s. With the activation
 * binary at 1 they read a^T x <= b' - a^T s (b' shaves strict faces by
 * strict_eps); at 0 the big-M slackens them away. The bound is composed at
 * its own scale before the big-M is added: audits probe closed faces with
 * zero margin, and ulp(M) of drift is already enough to fail them.
 */
void emit_leaf_rows(milp::Block& blk, const std::vector<int>& x_vars, const Leaf& leaf,
                    int leaf_ref, const Vector& s, const std::string& stem,
                    const EngineConfig& cfg) {
  for (std::size_t j = 0; j < leaf.constraints.size(); ++j) {
    const Halfspace& hs = leaf.constraints[j];
    std::vector<milp::Term> row;
    append_sparse(row, x_vars, hs.a);
    row.push_back({leaf_ref, cfg.big_m_tree});
    const double shaved = hs.b - (hs.strict ? cfg.strict_eps : 0.0);
    blk.constraints.push_back({stem + "_r" + std::to_string(j), std::move(row), milp::Sense::le,
                               pinned_big_m_rhs(shaved - dot(hs.a, s), cfg.big_m_tree)});
  }
}

/* Leaves below tau are pruned, so the exactly-one row doubles as the score
 * row; with no positive leaf it degenerates to 0 = 1, certifying that no
 * counterfactual exists. */
milp::Block tree_block(const DecisionTree& tree, double tau, const std::vector<int>& x_vars,
                       const Vector& s, int z, const EngineConfig& cfg) {
  milp::Block blk;
  std::vector<milp::Term> choose;
  for (const Leaf& leaf : tree.leaves) {
    if (leaf.weight < tau) continue;
    const int ref = -(static_cast<int>(blk.variables.size()) + 1);
    const std::string suffix = "_z" + std::to_string(z) + "_f" + std::to_string(leaf.id);
    blk.variables.push_back({"l" + suffix, 0.0, 1.0, true});
    choose.push_back({ref, 1.0});
    emit_leaf_rows(blk, x_vars, leaf, ref, s, "leaf" + suffix, cfg);
  }
  blk.constraints.push_back({tag("one", z), std::move(choose), milp::Sense::eq, 1.0});
  return blk;
}

/* Every leaf stays (a negative leaf may be selected as long as the average
 * clears tau); one assignment row per tree plus the averaged score row. */
milp::Block ensemble_block(const TreeEnsemble& ens, double tau, const std::vector<int>& x_vars,
                           const Vector& s, int z, const EngineConfig& cfg) {
  milp::Block blk;
  std::vector<milp::Term> score;
  for (std::size_t k = 0; k < ens.trees.size(); ++k) {
    const std::string kz = "_z" + std::to_string(z) + "_k" + std::to_string(k);
    std::vector<milp::Term> choose;
    for (const Leaf& leaf : ens.trees[k].leaves) {
      const int ref = -(static_cast<int>(blk.variables.size()) + 1);
      const std::string suffix = kz + "_f" + std::to_string(leaf.id);
      blk.variables.push_back({"l" + suffix, 0.0, 1.0, true});
      choose.push_back({ref, 1.0});
      if (leaf.weight != 0.0) score.push_back({ref, leaf.weight});
      emit_leaf_rows(blk, x_vars, leaf, ref, s, "leaf" + suffix, cfg);
    }
    blk.constraints.push_back({"one" + kz, std::move(choose), milp::Sense::eq, 1.0});
  }
  blk.constraints.push_back({tag("score", z), std::move(score), milp::Sense::ge,
                             static_cast<double>(ens.trees.size()) * tau});
  return blk;
}

/*
 * Big-M ReLU encoding for one scenario. Hidden unit i of layer l gets a
 * post-activation v >= 0 and a clamp binary g (1 forces v to zero) with
 *   v >= pre,  v <= pre + M_lb g,  v <= M_ub (1 - g),
 * where pre is the incoming affine expression; the input offset W s folds
 * into the first layer's right-hand sides. The binary sits on the clamped
 * side so every big-M term stays on the variable side of the rows: the
 * active path is then encoded bit-exactly, while a gate on the active side
 * would bake M_lb into the right-hand side and round the unit's bias at
 * ulp(M_lb), which zero-margin audits can see. The output layer is affine.
 */
milp::Block relu_block(const ReluNetwork& net, double tau, const std::vector<int>& x_vars,
                       const Vector& s, int z, const EngineConfig& cfg) {
  milp::Block blk;
  const std::size_t depth = net.layers.size();
  std::vector<int> prev;  // previous layer's activation refs; empty = raw input
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    const ReluNetwork::Layer& layer = net.layers[l];
    const bool from_input = prev.empty();
    std::vector<int> cur;
    cur.reserve(layer.bias.size());
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      const std::string suffix =
          "_z" + std::to_string(z) + "_l" + std::to_string(l + 1) + "_u" + std::to_string(i);
      const int v = -(static_cast<int>(blk.variables.size()) + 1);
      blk.variables.push_back({"v" + suffix, 0.0, cfg.big_m_nn_ub, false});
      const int g = -(static_cast<int>(blk.variables.size()) + 1);
      blk.variables.push_back({"g" + suffix, 0.0, 1.0, true});

      const Vector& w = layer.weights[i];
      const double shift = layer.bias[i] + (from_input ? dot(w, s) : 0.0);
      std::vector<milp::Term> lower;  // pre - v <= -shift
      if (from_input) {
        append_sparse(lower, x_vars, w);
      } else {
        for (std::size_t j = 0; j < w.size(); ++j) {
          if (w[j] != 0.0) lower.push_back({prev[j], w[j]});
        }
      }
      std::vector<milp::Term> upper;  // v - pre - M_lb g <= shift
      upper.push_back({v, 1.0});
      for (const milp::Term& term : lower) upper.push_back({term.var, -term.coef});
      upper.push_back({g, -cfg.big_m_nn_lb});
      lower.push_back({v, -1.0});

      blk.constraints.push_back(
          {"relu_lb" + suffix, std::move(lower), milp::Sense::le, -shift});
      blk.constraints.push_back({"relu_ub" + suffix, std::move(upper), milp::Sense::le, shift});
      blk.constraints.push_back({"relu_gate" + suffix, {{v, 1.0}, {g, cfg.big_m_nn_ub}},
                                 milp::Sense::le, cfg.big_m_nn_ub});
      cur.push_back(v);
    }
    prev = std::move(cur);
  }

  const ReluNetwork::Layer& out = net.layers[depth - 1];
  const Vector& w = out.weights[0];
  std::vector<milp::Term> row;
  double shift = out.bias[0];
  if (prev.empty()) {
    append_sparse(row, x_vars, w);
    shift += dot(w, s);
  } else {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] != 0.0) row.push_back({prev[j], w[j]});
    }
  }
  // The network optimum sits exactly on the threshold, where an audited
  // forward pass can round one ulp below tau even at the exact point; the
  // margin keeps returned points robust under floating-point evaluation
  // for a distance cost far beneath every reported tolerance.
  blk.constraints.push_back(
      {tag("out", z), std::move(row), milp::Sense::ge, tau + kForwardEvalMargin - shift});
  return blk;
}

milp::Block linear_block(const LinearModel& lin, double tau, const std::vector<int>& x_vars,
                         const Vector& s, int z) {
  milp::Block blk;
  std::vector<milp::Term> row;
  append_sparse(row, x_vars, lin.beta);
  blk.constraints.push_back(
      {tag("lin", z), std::move(row), milp::Sense::ge, tau - lin.beta0 - dot(lin.beta, s)});
  return blk;
}

milp::Block scenario_block(const TrainedModel& model, const std::vector<int>& x_vars,
                           const Vector& s, int z, const EngineConfig& cfg) {
  if (s.size() != model.space.dim()) throw InputError("scenario dimension mismatch");
  switch (model.kind()) {
    case ModelKind::linear:
      return linear_block(model.linear(), model.tau, x_vars, s, z);
    case ModelKind::tree:
      return tree_block(model.tree(), model.tau, x_vars, s, z, cfg);
    case ModelKind::ensemble:
      return ensemble_block(model.ensemble(), model.tau, x_vars, s, z, cfg);
    case ModelKind::relu:
      return relu_block(model.network(), model.tau, x_vars, s, z, cfg);
  }
  throw InputError("unknown model kind");
}

MpProgram build_any(const TrainedModel& model, const Vector& factual, const ScenarioSet& scenarios,
                    const DistanceSpec& dist, const EngineConfig& cfg) {
  if (scenarios.size() == 0) throw InputError("scenario set is empty");
  MpProgram mp = base_program(model, factual, dist);
  for (const Vector& s : scenarios.scenarios) append_scenario(mp, model, s, cfg);
  return mp;
}

void require_kind(const TrainedModel& model, ModelKind kind, const char* what) {
  if (model.kind() != kind) throw InputError(std::string(what) + ": wrong model kind");
}

}  // namespace

ScenarioSet ScenarioSet::zero(std::size_t dim) {
  ScenarioSet z;
  z.scenarios.push_back(Vector(dim, 0.0));
  return z;
}

void ScenarioSet::add(const Vector& s, const UncertaintySet& set) {
  if (!scenarios.empty() && s.size() != scenarios.front().size())
    throw InputError("scenario dimension mismatch");
  for (double v : s) {
    if (!std::isfinite(v)) throw InputError("scenario has non-finite entries");
  }
  if (set_norm(set.norm, s) > set.rho + 1e-9)
    throw InputError("scenario lies outside the uncertainty set");
  scenarios.push_back(s);
}

MpProgram build_mp_tree(const TrainedModel& model, const Vector& factual,
                        const ScenarioSet& scenarios, const DistanceSpec& dist,
                        const EngineConfig& cfg) {
  require_kind(model, ModelKind::tree, "build_mp_tree");
  return build_any(model, factual, scenarios, dist, cfg);
}

MpProgram build_mp_ensemble(const TrainedModel& model, const Vector& factual,
                            const ScenarioSet& scenarios, const DistanceSpec& dist,
                            const EngineConfig& cfg) {
  require_kind(model, ModelKind::ensemble, "build_mp_ensemble");
  return build_any(model, factual, scenarios, dist, cfg);
}

MpProgram build_mp_relu(const TrainedModel& model, const Vector& factual,
                        const ScenarioSet& scenarios, const DistanceSpec& dist,
                        const EngineConfig& cfg) {
  require_kind(model, ModelKind::relu, "build_mp_relu");
  return build_any(model, factual, scenarios, dist, cfg);
}

MpProgram build_mp_linear(const TrainedModel& model, const Vector& factual,
                          const ScenarioSet& scenarios, const DistanceSpec& dist,
                          const EngineConfig& cfg) {
  require_kind(model, ModelKind::linear, "build_mp_linear");
  return build_any(model, factual, scenarios, dist, cfg);
}

MpProgram build_mp(const TrainedModel& model, const Vector& factual, const ScenarioSet& scenarios,
                   const DistanceSpec& dist, const EngineConfig& cfg) {
  return build_any(model, factual, scenarios, dist, cfg);
}

void append_scenario(MpProgram& mp, const TrainedModel& model, const Vector& s,
                     const EngineConfig& cfg) {
  mp.model.add_block(scenario_block(model, mp.x_vars, s, mp.num_scenarios, cfg));
  ++mp.num_scenarios;
}

LinearCeResult robust_linear_ce(const TrainedModel& model, const Vector& factual,
                                const UncertaintySet& set, const DistanceSpec& dist,
                                const EngineConfig& cfg) {
  require_kind(model, ModelKind::linear, "robust_linear_ce");
  const LinearModel& lin = model.linear();
  const std::size_t n = model.space.dim();
  if (factual.size() != n) throw InputError("factual dimension mismatch");

  bool nonzero = false;
  for (double b : lin.beta) nonzero = nonzero || b != 0.0;
  if (!nonzero) throw InputError("robust_linear_ce: zero coefficient vector");

  // Dual norm over the perturbable (mutable) coordinates only.
  double dual = 0.0;
  if (set.norm == SetNorm::linf) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!model.space.immutable[i]) dual += std::abs(lin.beta[i]);
    }
  } else {
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!model.space.immutable[i]) q += lin.beta[i] * lin.beta[i];
    }
    dual = std::sqrt(q);
  }

  MpProgram mp = base_program(model, factual, dist);
  std::vector<milp::Term> row;
  append_sparse(row, mp.x_vars, lin.beta);
  mp.model.add_constraint(std::move(row), milp::Sense::ge,
                          model.tau - lin.beta0 + set.rho * dual, "lin_robust");

  milp::SolverConfig solver = cfg.solver;
  solver.time_limit_s = std::min(solver.time_limit_s, cfg.time_limit_s);
  const milp::SolveOutcome out = milp::solve_lp(mp.model, solver);

  LinearCeResult res;
  if (out.status == milp::SolveStatus::optimal) {
    res.feasible = true;
    res.point.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.point[i] = out.assignment[mp.x_vars[i]];
    res.distance = out.objective;
  }
  return res;
}

}  // namespace rce
