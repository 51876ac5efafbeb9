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
#include "rce/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rce/milp.hpp"
#include "rce/types.hpp"

namespace rce {
namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

Vector add(const Vector& a, const Vector& b) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

void push_unique(std::vector<std::string>& sink, const std::string& msg) {
  if (std::find(sink.begin(), sink.end(), msg) == sink.end()) sink.push_back(msg);
}

bool mentions_time_limit(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) {
    if (w.find("time limit") != std::string::npos) return true;
  }
  return false;
}

/** Flags pre-activations near the big-M bound anywhere on the forward pass. */
void warn_if_big_m_tight(const ReluNetwork& net, const Vector& y, const EngineConfig& cfg,
                         std::vector<std::string>& sink) {
  const double cap = std::min(cfg.big_m_nn_lb, cfg.big_m_nn_ub) - 1e-6;
  Vector v = y;
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
    const ReluNetwork::Layer& layer = net.layers[l];
    Vector next(layer.bias.size());
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      const double pre = dot(layer.weights[i], v) + layer.bias[i];
      if (std::abs(pre) >= cap) {
        push_unique(sink,
                    "network pre-activation magnitude approaches the big-M bound; "
                    "encoding may be inexact");
        return;
      }
      next[i] = std::max(0.0, pre);
    }
    v = std::move(next);
  }
}

/*
 * Validates the common preconditions and resolves the model the run
 * actually explains: the original when the factual classifies -1, the
 * negated model when the flag allows flipping a +1 factual.
 */
const TrainedModel& resolve_direction(const TrainedModel& model, const Vector& factual,
                                      const UncertaintySet& set, const EngineConfig& cfg,
                                      TrainedModel& negated_storage, RceResult& res) {
  if (!(set.rho >= 0.0)) throw InputError("rho must be nonnegative");
  if (factual.size() != model.space.dim()) throw InputError("factual dimension mismatch");
  if (!model.space.contains(factual, 1e-9))
    throw InputError("factual lies outside the feature box");
  model.validate();
  if (predict_class(model, factual) != 1) return model;
  if (!cfg.negate_on_positive_factual)
    throw InputError(
        "factual already classifies +1; enable model negation to explain the opposite direction");
  negated_storage = negate_model(model);
  if (predict_class(negated_storage, factual) == 1)
    throw InputError("factual sits exactly on the decision boundary; negation cannot flip it");
  res.warnings.push_back("model negated: explaining the +1 direction's counterfactual");
  return negated_storage;
}

std::vector<const Leaf*> leaves_by_id(const DecisionTree& tree) {
  std::vector<const Leaf*> order;
  order.reserve(tree.leaves.size());
  for (const Leaf& leaf : tree.leaves) order.push_back(&leaf);
  std::sort(order.begin(), order.end(),
            [](const Leaf* a, const Leaf* b) { return a->id < b->id; });
  return order;
}

double dual_norm_mutable(const Vector& a, const std::vector<char>& immutable, SetNorm norm) {
  if (norm == SetNorm::linf) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!immutable[i]) sum += std::abs(a[i]);
    }
    return sum;
  }
  double q = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!immutable[i]) q += a[i] * a[i];
  }
  return std::sqrt(q);
}

Vector extract_point(const milp::SolveOutcome& out, const std::vector<int>& x_vars) {
  Vector x(x_vars.size());
  for (std::size_t i = 0; i < x_vars.size(); ++i) x[i] = out.assignment[x_vars[i]];
  return x;
}

/*
 * Master incumbents can land a few ulps on the wrong side of a raw decision
 * face (the surrogate keeps them positive, the raw score does not). A point
 * that is not strictly positive touches the negative region, so its exact
 * robustness radius is zero; reporting that beats rejecting the run.
 */
double certified_radius(const TrainedModel& m, const Vector& point, SetNorm norm,
                        const EngineConfig& cfg) {
  if (raw_class(m, point) != 1) return 0.0;
  return robustness_radius(m, point, norm, cfg);
}

}  // namespace

const char* to_string(CeStatus s) {
  switch (s) {
    case CeStatus::converged:
      return "converged";
    case CeStatus::time_limit:
      return "time_limit";
    case CeStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

RceResult solve_robust_ce(const TrainedModel& model, const Vector& factual,
                          const UncertaintySet& set, const DistanceSpec& dist,
                          const EngineConfig& cfg) {
  const Stopwatch clock;
  RceResult res;
  res.rho_requested = set.rho;
  TrainedModel negated_storage;
  const TrainedModel& m = resolve_direction(model, factual, set, cfg, negated_storage, res);

  if (m.kind() == ModelKind::linear && !cfg.linear_iterative) {
    const Stopwatch mp_clock;
    const LinearCeResult lin = robust_linear_ce(m, factual, set, dist, cfg);
    const double mp_time = mp_clock.seconds();
    if (!lin.feasible) {
      res.status = CeStatus::infeasible;
      return res;
    }
    res.status = CeStatus::converged;
    res.point = lin.point;
    res.distance = lin.distance;
    res.rho_certified = certified_radius(m, lin.point, set.norm, cfg);
    const ApOutcome ap = ap_linear(m, lin.point, set, cfg);
    res.trace.push_back(
        {1, lin.distance, mp_time, ap.violation, ap.wall_time_s, std::nullopt, res.rho_certified});
    res.incumbents.push_back({lin.point, lin.distance, res.rho_certified});
    return res;
  }

  ScenarioSet scenarios = ScenarioSet::zero(model.space.dim());
  MpProgram mp = build_mp(m, factual, scenarios, dist, cfg);
  const bool track_radius =
      cfg.track_incumbent_radius &&
      (m.kind() == ModelKind::tree || m.kind() == ModelKind::ensemble);
  res.status = CeStatus::time_limit;
  bool have_point = false;

  while (true) {
    const double left = cfg.time_limit_s - clock.seconds();
    if (left <= 0.0) {
      push_unique(res.warnings, "time limit reached");
      break;
    }
    milp::SolverConfig solver = cfg.solver;
    solver.time_limit_s = std::min(solver.time_limit_s, left);

    const Stopwatch mp_clock;
    const milp::SolveOutcome out = milp::solve_milp(mp.model, solver);
    const double mp_time = mp_clock.seconds();
    for (const std::string& w : out.warnings) push_unique(res.warnings, w);
    if (out.status == milp::SolveStatus::infeasible) {
      res.status = CeStatus::infeasible;
      res.point.clear();
      have_point = false;
      break;
    }
    if (out.status == milp::SolveStatus::unbounded)
      throw SolverError("master problem unbounded; the distance objective admits no minimum");
    if (out.status != milp::SolveStatus::optimal) {
      push_unique(res.warnings, "time limit reached in the master problem");
      break;
    }

    const Vector x_star = extract_point(out, mp.x_vars);
    if (m.kind() == ModelKind::relu) {
      for (const Vector& s : scenarios.scenarios)
        warn_if_big_m_tight(m.network(), add(x_star, s), cfg, res.warnings);
    }

    IterationRecord rec;
    rec.index = static_cast<int>(res.trace.size()) + 1;
    rec.mp_objective = out.objective;
    rec.mp_wall_time_s = mp_time;
    Incumbent inc{x_star, out.objective, std::nullopt};
    if (track_radius) {
      const double rb = certified_radius(m, x_star, set.norm, cfg);
      rec.rho_bar = rb;
      inc.rho_bar = rb;
    }
    res.incumbents.push_back(std::move(inc));
    res.point = x_star;
    res.distance = out.objective;
    have_point = true;

    const double ap_left = cfg.time_limit_s - clock.seconds();
    if (ap_left <= 0.0) {
      res.trace.push_back(std::move(rec));
      push_unique(res.warnings, "time limit reached");
      break;
    }
    EngineConfig ap_cfg = cfg;
    ap_cfg.time_limit_s = ap_left;
    const ApOutcome ap = adversarial_problem(m, x_star, set, ap_cfg);
    rec.ap_violation = ap.violation;
    rec.ap_wall_time_s = ap.wall_time_s;
    for (const std::string& w : ap.warnings) push_unique(res.warnings, w);

    if (ap.violation <= cfg.epsilon) {
      res.status = mentions_time_limit(ap.warnings) ? CeStatus::time_limit : CeStatus::converged;
      res.trace.push_back(std::move(rec));
      break;
    }
    if (raw_class(m, add(x_star, ap.scenario)) != -1) {
      // Soundness guard: a positive surrogate deficit that does not witness
      // an exact misclassification cannot cut off x_star.
      push_unique(res.warnings,
                  "adversarial objective positive but the class did not flip at the "
                  "returned scenario; accepting the incumbent");
      res.status = CeStatus::converged;
      res.trace.push_back(std::move(rec));
      break;
    }
    double nearest = std::numeric_limits<double>::infinity();
    for (const Vector& z : scenarios.scenarios) {
      double d = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i)
        d = std::max(d, std::abs(z[i] - ap.scenario[i]));
      nearest = std::min(nearest, d);
    }
    if (nearest <= 1e-9) {
      push_unique(res.warnings,
                  "adversarial scenario repeats an existing one; terminating to avoid a stall");
      res.status = CeStatus::time_limit;
      res.trace.push_back(std::move(rec));
      break;
    }
    rec.scenario_added = ap.scenario;
    res.trace.push_back(std::move(rec));
    scenarios.add(ap.scenario, set);
    append_scenario(mp, m, ap.scenario, cfg);
  }

  if (res.status != CeStatus::infeasible && have_point)
    res.rho_certified = certified_radius(m, res.point, set.norm, cfg);
  return res;
}

RceResult solve_heuristic(const TrainedModel& model, const Vector& factual,
                          const UncertaintySet& set, const DistanceSpec& dist,
                          const EngineConfig& cfg) {
  const Stopwatch clock;
  RceResult res;
  res.rho_requested = set.rho;
  TrainedModel negated_storage;
  const TrainedModel& m = resolve_direction(model, factual, set, cfg, negated_storage, res);
  if (m.kind() != ModelKind::tree && m.kind() != ModelKind::ensemble)
    throw InputError("the single-leaf heuristic supports tree and ensemble models only");

  const ScenarioSet zero = ScenarioSet::zero(model.space.dim());
  const MpProgram proto = build_mp(m, factual, zero, dist, cfg);
  res.status = CeStatus::infeasible;
  bool timed_out = false;

  if (m.kind() == ModelKind::tree) {
    // Per positive leaf: fix its activation binary and tighten every face
    // by the dual-norm margin, so the whole ball stays inside the leaf.
    double best = std::numeric_limits<double>::infinity();
    for (const Leaf* leaf : leaves_by_id(m.tree())) {
      if (leaf->weight < m.tau) continue;
      const double left = cfg.time_limit_s - clock.seconds();
      if (left <= 0.0) {
        timed_out = true;
        break;
      }
      MpProgram trial = proto;
      trial.model.set_bounds(trial.model.variable("l_z0_f" + std::to_string(leaf->id)), 1.0, 1.0);
      for (std::size_t j = 0; j < leaf->constraints.size(); ++j) {
        const Halfspace& hs = leaf->constraints[j];
        std::vector<milp::Term> row;
        for (std::size_t i = 0; i < hs.a.size(); ++i) {
          if (hs.a[i] != 0.0) row.push_back({trial.x_vars[i], hs.a[i]});
        }
        const double margin = set.rho * dual_norm_mutable(hs.a, m.space.immutable, set.norm);
        const double shaved = hs.b - (hs.strict ? cfg.strict_eps : 0.0);
        trial.model.add_constraint(std::move(row), milp::Sense::le, shaved - margin,
                                   "tight_r" + std::to_string(j));
      }
      milp::SolverConfig solver = cfg.solver;
      solver.time_limit_s = std::min(solver.time_limit_s, left);
      const milp::SolveOutcome out = milp::solve_milp(trial.model, solver);
      if (out.status == milp::SolveStatus::time_limit) {
        timed_out = true;
        continue;
      }
      if (out.status != milp::SolveStatus::optimal) continue;  // tightened leaf is empty
      if (out.objective < best) {
        best = out.objective;
        res.point = extract_point(out, trial.x_vars);
        res.distance = out.objective;
        res.status = CeStatus::converged;
      }
    }
  } else {
    // One MILP: the existing scenario-0 leaf choice binaries gate the
    // tightened containment rows, and the score row keeps the selected
    // combination at or above tau.
    MpProgram trial = proto;
    const TreeEnsemble& ens = m.ensemble();
    for (std::size_t k = 0; k < ens.trees.size(); ++k) {
      for (const Leaf& leaf : ens.trees[k].leaves) {
        const std::string suffix = "_k" + std::to_string(k) + "_f" + std::to_string(leaf.id);
        const int gate = trial.model.variable("l_z0" + suffix);
        for (std::size_t j = 0; j < leaf.constraints.size(); ++j) {
          const Halfspace& hs = leaf.constraints[j];
          std::vector<milp::Term> row;
          for (std::size_t i = 0; i < hs.a.size(); ++i) {
            if (hs.a[i] != 0.0) row.push_back({trial.x_vars[i], hs.a[i]});
          }
          row.push_back({gate, cfg.big_m_tree});
          const double margin = set.rho * dual_norm_mutable(hs.a, m.space.immutable, set.norm);
          const double shaved = hs.b - (hs.strict ? cfg.strict_eps : 0.0);
          trial.model.add_constraint(std::move(row), milp::Sense::le,
                                     shaved - margin + cfg.big_m_tree,
                                     "tight" + suffix + "_r" + std::to_string(j));
        }
      }
    }
    milp::SolverConfig solver = cfg.solver;
    solver.time_limit_s = std::min(solver.time_limit_s, cfg.time_limit_s);
    const milp::SolveOutcome out = milp::solve_milp(trial.model, solver);
    if (out.status == milp::SolveStatus::time_limit) timed_out = true;
    if (out.status == milp::SolveStatus::optimal) {
      res.point = extract_point(out, trial.x_vars);
      res.distance = out.objective;
      res.status = CeStatus::converged;
    }
  }

  if (timed_out) {
    push_unique(res.warnings, "time limit reached in the heuristic");
    if (res.status != CeStatus::converged) res.status = CeStatus::time_limit;
  }
  IterationRecord rec;
  rec.index = 1;
  rec.mp_objective = res.status == CeStatus::converged ? res.distance : 0.0;
  rec.mp_wall_time_s = clock.seconds();
  if (res.status == CeStatus::converged) {
    res.rho_certified = certified_radius(m, res.point, set.norm, cfg);
    if (cfg.track_incumbent_radius) rec.rho_bar = res.rho_certified;
    res.incumbents.push_back({res.point, res.distance, rec.rho_bar});
  }
  res.trace.push_back(std::move(rec));
  return res;
}

void write_trace_jsonl(const RceResult& result, std::ostream& out) {
  using nlohmann::json;
  for (const IterationRecord& r : result.trace) {
    json j;
    j["iteration"] = r.index;
    j["mp_objective"] = r.mp_objective;
    j["mp_wall_time_s"] = r.mp_wall_time_s;
    j["ap_violation"] = r.ap_violation;
    j["ap_wall_time_s"] = r.ap_wall_time_s;
    j["scenario_added"] = r.scenario_added ? json(*r.scenario_added) : json(nullptr);
    j["rho_bar"] = r.rho_bar ? json(*r.rho_bar) : json(nullptr);
    out << j.dump() << "\n";
  }
}

}  // namespace rce
