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
#include "rce/adversarial.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rce/milp.hpp"
#include "rce/types.hpp"

namespace rce {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

milp::SolverConfig budgeted_solver(const EngineConfig& cfg) {
  milp::SolverConfig solver = cfg.solver;
  solver.time_limit_s = std::min(solver.time_limit_s, cfg.time_limit_s);
  // Projecting the relaxation optimum back onto the l2 ball costs objective
  // proportional to the remaining cut violation, so attacks and radius
  // certificates drive the cut loop well below the tolerance they report at.
  solver.conic_tol = std::min(solver.conic_tol, 1e-11);
  return solver;
}

/** Dual norm of the set norm, over the perturbable coordinates only. */
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

/*
 * Registers the perturbation variables. Immutable coordinates are pinned
 * to zero; l2 sets get the ball as a conic row on top of the square
 * bounds. within_box additionally keeps x + s inside the feature box.
 */
std::vector<int> add_perturbation_vars(milp::MilpModel& m, const TrainedModel& model,
                                       const Vector& x, const UncertaintySet& set,
                                       bool within_box) {
  const std::size_t n = model.space.dim();
  std::vector<int> s_vars;
  s_vars.reserve(n);
  std::vector<int> ball_members;
  for (std::size_t i = 0; i < n; ++i) {
    double lo = -set.rho, hi = set.rho;
    if (within_box) {
      lo = std::max(lo, model.space.lower[i] - x[i]);
      hi = std::min(hi, model.space.upper[i] - x[i]);
    }
    if (model.space.immutable[i]) lo = hi = 0.0;
    const int v = m.add_variable("s" + std::to_string(i), std::min(lo, hi), std::max(lo, hi));
    s_vars.push_back(v);
    if (!model.space.immutable[i]) ball_members.push_back(v);
  }
  if (set.norm == SetNorm::l2 && !ball_members.empty()) {
    m.add_conic({std::move(ball_members), set.rho, -1});
  }
  return s_vars;
}

/** Scales s back onto the l2 ball; tangent cuts can leave a small excess. */
void project_onto_ball(Vector& s, const UncertaintySet& set) {
  if (set.norm != SetNorm::l2) return;
  const double len = norm_l2(s);
  if (len > set.rho && len > 0.0) {
    const double f = set.rho / len;
    for (double& v : s) v *= f;
  }
}

Vector extract(const milp::SolveOutcome& out, const std::vector<int>& vars) {
  Vector v(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) v[i] = out.assignment[vars[i]];
  return v;
}

Vector add(const Vector& a, const Vector& b) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

const char* kApTimeLimit = "adversarial time limit reached before certification";

/** Minimum halfspace slack of y over the leaf's rows (+inf for no rows). */
double leaf_depth(const Leaf& leaf, const Vector& y) {
  double depth = kInf;
  for (const Halfspace& hs : leaf.constraints) depth = std::min(depth, hs.b - dot(hs.a, y));
  return depth;
}

/** Big-M network rows for a fixed base point plus perturbation variables. */
struct NetworkEncoding {
  std::vector<int> last_hidden;  // empty when the network is a single affine layer
  double out_shift = 0.0;        // constant folded into the output row's rhs
};

NetworkEncoding encode_network(milp::MilpModel& m, const ReluNetwork& net, const Vector& x,
                               const std::vector<int>& s_vars, const EngineConfig& cfg) {
  NetworkEncoding enc;
  std::vector<int> prev;
  const std::size_t depth = net.layers.size();
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    const ReluNetwork::Layer& layer = net.layers[l];
    const bool from_input = prev.empty();
    std::vector<int> cur;
    cur.reserve(layer.bias.size());
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      const std::string suffix = "_l" + std::to_string(l + 1) + "_u" + std::to_string(i);
      const int v = m.add_variable("v" + suffix, 0.0, cfg.big_m_nn_ub);
      // Clamp binary (1 forces v to zero), keeping big-M off the active
      // rows' right-hand sides; see the master-problem encoding.
      const int g = m.add_variable("g" + suffix, 0.0, 1.0, true);
      const Vector& w = layer.weights[i];
      double shift = layer.bias[i];
      std::vector<milp::Term> pre;
      if (from_input) {
        shift += dot(w, x);
        for (std::size_t j = 0; j < w.size(); ++j) {
          if (w[j] != 0.0) pre.push_back({s_vars[j], w[j]});
        }
      } else {
        for (std::size_t j = 0; j < w.size(); ++j) {
          if (w[j] != 0.0) pre.push_back({prev[j], w[j]});
        }
      }
      std::vector<milp::Term> upper;
      upper.push_back({v, 1.0});
      for (const milp::Term& t : pre) upper.push_back({t.var, -t.coef});
      upper.push_back({g, -cfg.big_m_nn_lb});
      std::vector<milp::Term> lower = std::move(pre);
      lower.push_back({v, -1.0});
      m.add_constraint(std::move(lower), milp::Sense::le, -shift, "relu_lb" + suffix);
      m.add_constraint(std::move(upper), milp::Sense::le, shift, "relu_ub" + suffix);
      m.add_constraint({{v, 1.0}, {g, cfg.big_m_nn_ub}}, milp::Sense::le, cfg.big_m_nn_ub,
                       "relu_gate" + suffix);
      cur.push_back(v);
    }
    prev = std::move(cur);
  }
  const ReluNetwork::Layer& out = net.layers[depth - 1];
  enc.out_shift = out.bias[0];
  if (prev.empty()) enc.out_shift += dot(out.weights[0], x);
  enc.last_hidden = std::move(prev);
  return enc;
}

/** Output-score terms for the encoding (on s when the net is affine). */
std::vector<milp::Term> output_terms(const ReluNetwork& net, const NetworkEncoding& enc,
                                     const std::vector<int>& s_vars) {
  const Vector& w = net.layers.back().weights[0];
  std::vector<milp::Term> terms;
  const std::vector<int>& vars = enc.last_hidden.empty() ? s_vars : enc.last_hidden;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] != 0.0) terms.push_back({vars[j], w[j]});
  }
  return terms;
}

/** Warns when a pre-activation at y gets close to the big-M bound. */
void check_big_m(const ReluNetwork& net, const Vector& y, const EngineConfig& cfg,
                 std::vector<std::string>& warnings) {
  const double cap = std::min(cfg.big_m_nn_lb, cfg.big_m_nn_ub) - 1e-6;
  Vector v = y;
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
    const ReluNetwork::Layer& layer = net.layers[l];
    Vector next(layer.bias.size());
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      const double pre = dot(layer.weights[i], v) + layer.bias[i];
      if (std::abs(pre) >= cap) {
        warnings.push_back("network pre-activation magnitude " + std::to_string(std::abs(pre)) +
                           " approaches the big-M bound; encoding may be inexact");
        return;
      }
      next[i] = std::max(0.0, pre);
    }
    v = std::move(next);
  }
}

/** Leaves in ascending id order, for the deterministic tie-break. */
std::vector<const Leaf*> leaves_by_id(const DecisionTree& tree) {
  std::vector<const Leaf*> order;
  order.reserve(tree.leaves.size());
  for (const Leaf& leaf : tree.leaves) order.push_back(&leaf);
  std::sort(order.begin(), order.end(),
            [](const Leaf* a, const Leaf* b) { return a->id < b->id; });
  return order;
}

void check_point(const TrainedModel& model, const Vector& x, const char* what) {
  if (x.size() != model.space.dim())
    throw InputError(std::string(what) + ": point dimension mismatch");
}

}  // namespace

ApOutcome ap_linear(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                    const EngineConfig& cfg) {
  if (model.kind() != ModelKind::linear) throw InputError("ap_linear: wrong model kind");
  check_point(model, x, "ap_linear");
  const Stopwatch clock;
  const LinearModel& lin = model.linear();
  const std::size_t n = x.size();

  ApOutcome out;
  out.scenario.assign(n, 0.0);
  if (cfg.scenarios_within_box) {
    // Box-clipped worst case; separable for linf, one cut LP for l2.
    if (set.norm == SetNorm::linf) {
      for (std::size_t i = 0; i < n; ++i) {
        if (model.space.immutable[i]) continue;
        const double target = lin.beta[i] > 0.0 ? -set.rho : (lin.beta[i] < 0.0 ? set.rho : 0.0);
        out.scenario[i] = std::clamp(target, model.space.lower[i] - x[i],
                                     model.space.upper[i] - x[i]);
      }
    } else {
      milp::MilpModel m;
      const std::vector<int> s_vars = add_perturbation_vars(m, model, x, set, true);
      std::vector<milp::Term> obj;
      for (std::size_t i = 0; i < n; ++i) {
        if (lin.beta[i] != 0.0) obj.push_back({s_vars[i], -lin.beta[i]});
      }
      m.set_objective(milp::ObjSense::maximize, std::move(obj));
      const milp::SolveOutcome sol = milp::solve_lp(m, budgeted_solver(cfg));
      if (sol.status == milp::SolveStatus::optimal) out.scenario = extract(sol, s_vars);
      project_onto_ball(out.scenario, set);
    }
  } else if (set.rho > 0.0) {
    if (set.norm == SetNorm::linf) {
      for (std::size_t i = 0; i < n; ++i) {
        if (model.space.immutable[i]) continue;
        if (lin.beta[i] > 0.0) out.scenario[i] = -set.rho;
        if (lin.beta[i] < 0.0) out.scenario[i] = set.rho;
      }
    } else {
      const double len = dual_norm_mutable(lin.beta, model.space.immutable, SetNorm::l2);
      if (len > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          if (!model.space.immutable[i]) out.scenario[i] = -set.rho * lin.beta[i] / len;
        }
      }
    }
  }
  out.violation = model.tau - raw_score(model, add(x, out.scenario));
  out.wall_time_s = clock.seconds();
  return out;
}

ApOutcome ap_tree(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                  const EngineConfig& cfg) {
  if (model.kind() != ModelKind::tree) throw InputError("ap_tree: wrong model kind");
  check_point(model, x, "ap_tree");
  const Stopwatch clock;
  const DecisionTree& tree = model.tree();

  ApOutcome out;
  out.scenario.assign(x.size(), 0.0);
  double best = -kInf;
  for (const Leaf* leaf : leaves_by_id(tree)) {
    if (leaf->weight >= model.tau) continue;

    milp::MilpModel m;
    const std::vector<int> s_vars = add_perturbation_vars(m, model, x, set,
                                                          cfg.scenarios_within_box);
    const int alpha = m.add_variable("alpha", 0.0, cfg.big_m_tree);
    for (std::size_t j = 0; j < leaf->constraints.size(); ++j) {
      const Halfspace& hs = leaf->constraints[j];
      const int w = m.add_variable("w" + std::to_string(j), 0.0, cfg.big_m_tree);
      m.add_constraint({{alpha, 1.0}, {w, -1.0}}, milp::Sense::le, 0.0,
                       "cap" + std::to_string(j));
      std::vector<milp::Term> row;
      for (std::size_t i = 0; i < hs.a.size(); ++i) {
        if (hs.a[i] != 0.0) row.push_back({s_vars[i], hs.a[i]});
      }
      row.push_back({w, 1.0});
      m.add_constraint(std::move(row), milp::Sense::le, hs.b - dot(hs.a, x),
                       "reach" + std::to_string(j));
    }
    m.set_objective(milp::ObjSense::maximize, {{alpha, 1.0}});

    const milp::SolveOutcome sol = milp::solve_lp(m, budgeted_solver(cfg));
    if (sol.status == milp::SolveStatus::time_limit) {
      out.warnings.push_back(kApTimeLimit);
      continue;
    }
    if (sol.status != milp::SolveStatus::optimal) continue;  // unreachable leaf

    Vector s = extract(sol, s_vars);
    project_onto_ball(s, set);
    const double value = model.tau - surrogate_score(tree, model.tau, add(x, s));
    if (value > best) {
      best = value;
      out.scenario = std::move(s);
      out.witness_leaf = leaf->id;
    }
  }
  out.violation = best > -kInf ? best : 0.0;
  out.wall_time_s = clock.seconds();
  return out;
}

ApOutcome ap_ensemble(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                      const EngineConfig& cfg) {
  if (model.kind() != ModelKind::ensemble) throw InputError("ap_ensemble: wrong model kind");
  check_point(model, x, "ap_ensemble");
  const Stopwatch clock;
  const TreeEnsemble& ens = model.ensemble();
  const double M = cfg.big_m_tree;

  milp::MilpModel m;
  const std::vector<int> s_vars = add_perturbation_vars(m, model, x, set,
                                                        cfg.scenarios_within_box);
  const int alpha = m.add_variable("alpha", 0.0, M);
  std::vector<milp::Term> score;
  for (std::size_t k = 0; k < ens.trees.size(); ++k) {
    std::vector<milp::Term> choose;
    for (const Leaf& leaf : ens.trees[k].leaves) {
      const std::string suffix = "_k" + std::to_string(k) + "_f" + std::to_string(leaf.id);
      const int y = m.add_variable("y" + suffix, 0.0, 1.0, true);
      choose.push_back({y, 1.0});
      if (leaf.weight != 0.0) score.push_back({y, leaf.weight});
      for (std::size_t j = 0; j < leaf.constraints.size(); ++j) {
        const Halfspace& hs = leaf.constraints[j];
        const int w = m.add_variable("w" + suffix + "_r" + std::to_string(j), 0.0, M);
        m.add_constraint({{alpha, 1.0}, {w, -1.0}, {y, M}}, milp::Sense::le, M,
                         "cap" + suffix + "_r" + std::to_string(j));
        std::vector<milp::Term> row;
        for (std::size_t i = 0; i < hs.a.size(); ++i) {
          if (hs.a[i] != 0.0) row.push_back({s_vars[i], hs.a[i]});
        }
        row.push_back({w, 1.0});
        row.push_back({y, M});
        m.add_constraint(std::move(row), milp::Sense::le, hs.b - dot(hs.a, x) + M,
                         "reach" + suffix + "_r" + std::to_string(j));
      }
    }
    m.add_constraint(std::move(choose), milp::Sense::eq, 1.0, "one_k" + std::to_string(k));
  }
  m.add_constraint(std::move(score), milp::Sense::le,
                   static_cast<double>(ens.trees.size()) * model.tau - cfg.strict_eps, "score");
  m.set_objective(milp::ObjSense::maximize, {{alpha, 1.0}});

  ApOutcome out;
  out.scenario.assign(x.size(), 0.0);
  const milp::SolveOutcome sol = milp::solve_milp(m, budgeted_solver(cfg));
  if (sol.status == milp::SolveStatus::time_limit && !sol.has_assignment()) {
    out.warnings.push_back(kApTimeLimit);
    out.wall_time_s = clock.seconds();
    return out;
  }
  if (sol.status == milp::SolveStatus::optimal ||
      (sol.status == milp::SolveStatus::time_limit && sol.has_assignment())) {
    if (sol.status == milp::SolveStatus::time_limit) out.warnings.push_back(kApTimeLimit);
    Vector s = extract(sol, s_vars);
    project_onto_ball(s, set);
    const Vector y = add(x, s);
    if (set.norm == SetNorm::l2) {
      // Recompute the depth at the projected point from the containing leaves.
      if (raw_class(model, y) == -1) {
        double depth = kInf;
        for (const DecisionTree& tree : ens.trees) {
          depth = std::min(depth, leaf_depth(locate_leaf(tree, y), y));
        }
        out.violation = depth == kInf ? std::max(0.0, model.tau - raw_score(model, y))
                                      : std::max(0.0, depth);
        out.scenario = std::move(s);
      }
    } else {
      out.violation = sol.objective;
      out.scenario = std::move(s);
    }
  }
  out.wall_time_s = clock.seconds();
  return out;
}

ApOutcome ap_relu(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                  const EngineConfig& cfg) {
  if (model.kind() != ModelKind::relu) throw InputError("ap_relu: wrong model kind");
  check_point(model, x, "ap_relu");
  const Stopwatch clock;
  const ReluNetwork& net = model.network();

  milp::MilpModel m;
  const std::vector<int> s_vars = add_perturbation_vars(m, model, x, set,
                                                        cfg.scenarios_within_box);
  const NetworkEncoding enc = encode_network(m, net, x, s_vars, cfg);
  // maximize tau - h(x+s) = (tau - shift) - score terms
  std::vector<milp::Term> obj = output_terms(net, enc, s_vars);
  for (milp::Term& t : obj) t.coef = -t.coef;
  m.set_objective(milp::ObjSense::maximize, std::move(obj), model.tau - enc.out_shift);

  ApOutcome out;
  out.scenario.assign(x.size(), 0.0);
  const milp::SolveOutcome sol = milp::solve_milp(m, budgeted_solver(cfg));
  if ((sol.status == milp::SolveStatus::optimal || sol.status == milp::SolveStatus::time_limit) &&
      sol.has_assignment()) {
    if (sol.status == milp::SolveStatus::time_limit) out.warnings.push_back(kApTimeLimit);
    Vector s = extract(sol, s_vars);
    project_onto_ball(s, set);
    out.scenario = std::move(s);
  } else if (sol.status == milp::SolveStatus::time_limit) {
    out.warnings.push_back(kApTimeLimit);
  }
  const Vector y = add(x, out.scenario);
  out.violation = model.tau - raw_score(model, y);
  check_big_m(net, y, cfg, out.warnings);
  out.wall_time_s = clock.seconds();
  return out;
}

ApOutcome adversarial_problem(const TrainedModel& model, const Vector& x,
                              const UncertaintySet& set, const EngineConfig& cfg) {
  switch (model.kind()) {
    case ModelKind::linear:
      return ap_linear(model, x, set, cfg);
    case ModelKind::tree:
      return ap_tree(model, x, set, cfg);
    case ModelKind::ensemble:
      return ap_ensemble(model, x, set, cfg);
    case ModelKind::relu:
      return ap_relu(model, x, set, cfg);
  }
  throw InputError("unknown model kind");
}

namespace {

/*
 * Shared scaffolding for the min-norm problems: perturbation variables
 * with generous square bounds, the norm envelope t, and minimize t.
 * The caller adds the rows placing x + s in the negative region.
 */
struct RadiusProgram {
  milp::MilpModel m;
  std::vector<int> s_vars;
  int t = -1;
};

RadiusProgram radius_base(const TrainedModel& model, const Vector& x, SetNorm norm) {
  const std::size_t n = model.space.dim();
  double span = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    span = std::max(span, model.space.upper[i] - model.space.lower[i]);
    span = std::max(span, std::abs(x[i] - model.space.lower[i]));
    span = std::max(span, std::abs(model.space.upper[i] - x[i]));
  }
  const double cap = 8.0 * span;  // radii beyond this saturate; certification range is << cap

  RadiusProgram rp;
  rp.s_vars.reserve(n);
  std::vector<int> members;
  for (std::size_t i = 0; i < n; ++i) {
    const bool fixed = model.space.immutable[i] != 0;
    const int v = rp.m.add_variable("s" + std::to_string(i), fixed ? 0.0 : -cap,
                                    fixed ? 0.0 : cap);
    rp.s_vars.push_back(v);
    if (!fixed) members.push_back(v);
  }
  rp.t = rp.m.add_variable("t", 0.0, cap * static_cast<double>(n));
  if (norm == SetNorm::linf) {
    for (int v : members) {
      rp.m.add_constraint({{v, 1.0}, {rp.t, -1.0}}, milp::Sense::le, 0.0);
      rp.m.add_constraint({{v, -1.0}, {rp.t, -1.0}}, milp::Sense::le, 0.0);
    }
  } else if (!members.empty()) {
    rp.m.add_conic({std::move(members), 0.0, rp.t});
  }
  rp.m.set_objective(milp::ObjSense::minimize, {{rp.t, 1.0}});
  return rp;
}

/** Distance from x to one epsilon-relaxed leaf; +inf when unreachable. */
double leaf_distance(const TrainedModel& model, const Leaf& leaf, const Vector& x, SetNorm norm,
                     const EngineConfig& cfg) {
  RadiusProgram rp = radius_base(model, x, norm);
  for (std::size_t j = 0; j < leaf.constraints.size(); ++j) {
    const Halfspace& hs = leaf.constraints[j];
    std::vector<milp::Term> row;
    for (std::size_t i = 0; i < hs.a.size(); ++i) {
      if (hs.a[i] != 0.0) row.push_back({rp.s_vars[i], hs.a[i]});
    }
    const double shaved = hs.b - (hs.strict ? cfg.strict_eps : 0.0);
    rp.m.add_constraint(std::move(row), milp::Sense::le, shaved - dot(hs.a, x),
                        "in" + std::to_string(j));
  }
  const milp::SolveOutcome sol = milp::solve_lp(rp.m, budgeted_solver(cfg));
  if (sol.status == milp::SolveStatus::infeasible) return kInf;
  if (sol.status != milp::SolveStatus::optimal) return 0.0;  // no certificate
  return sol.objective;
}

double radius_linear(const TrainedModel& model, const Vector& x, SetNorm norm) {
  const LinearModel& lin = model.linear();
  const double dual = dual_norm_mutable(lin.beta, model.space.immutable, norm);
  if (dual == 0.0) return kInf;
  return (raw_score(model, x) - model.tau) / dual;
}

double radius_tree(const TrainedModel& model, const Vector& x, SetNorm norm,
                   const EngineConfig& cfg) {
  double best = kInf;
  for (const Leaf& leaf : model.tree().leaves) {
    if (leaf.weight >= model.tau) continue;
    best = std::min(best, leaf_distance(model, leaf, x, norm, cfg));
  }
  return best;
}

double radius_ensemble(const TrainedModel& model, const Vector& x, SetNorm norm,
                       const EngineConfig& cfg) {
  const TreeEnsemble& ens = model.ensemble();
  RadiusProgram rp = radius_base(model, x, norm);
  const double M = cfg.big_m_tree;
  std::vector<milp::Term> score;
  for (std::size_t k = 0; k < ens.trees.size(); ++k) {
    std::vector<milp::Term> choose;
    for (const Leaf& leaf : ens.trees[k].leaves) {
      const std::string suffix = "_k" + std::to_string(k) + "_f" + std::to_string(leaf.id);
      const int y = rp.m.add_variable("y" + suffix, 0.0, 1.0, true);
      choose.push_back({y, 1.0});
      if (leaf.weight != 0.0) score.push_back({y, leaf.weight});
      for (std::size_t j = 0; j < leaf.constraints.size(); ++j) {
        const Halfspace& hs = leaf.constraints[j];
        std::vector<milp::Term> row;
        for (std::size_t i = 0; i < hs.a.size(); ++i) {
          if (hs.a[i] != 0.0) row.push_back({rp.s_vars[i], hs.a[i]});
        }
        row.push_back({y, M});
        const double shaved = hs.b - (hs.strict ? cfg.strict_eps : 0.0);
        rp.m.add_constraint(std::move(row), milp::Sense::le, shaved - dot(hs.a, x) + M,
                            "in" + suffix + "_r" + std::to_string(j));
      }
    }
    rp.m.add_constraint(std::move(choose), milp::Sense::eq, 1.0, "one_k" + std::to_string(k));
  }
  rp.m.add_constraint(std::move(score), milp::Sense::le,
                      static_cast<double>(ens.trees.size()) * model.tau - cfg.strict_eps,
                      "score");
  const milp::SolveOutcome sol = milp::solve_milp(rp.m, budgeted_solver(cfg));
  if (sol.status == milp::SolveStatus::infeasible) return kInf;
  if (sol.status != milp::SolveStatus::optimal) return 0.0;
  return sol.objective;
}

double radius_relu(const TrainedModel& model, const Vector& x, SetNorm norm,
                   const EngineConfig& cfg) {
  const ReluNetwork& net = model.network();
  RadiusProgram rp = radius_base(model, x, norm);
  const NetworkEncoding enc = encode_network(rp.m, net, x, rp.s_vars, cfg);
  rp.m.add_constraint(output_terms(net, enc, rp.s_vars), milp::Sense::le,
                      model.tau - cfg.strict_eps - enc.out_shift, "out");
  const milp::SolveOutcome sol = milp::solve_milp(rp.m, budgeted_solver(cfg));
  if (sol.status == milp::SolveStatus::infeasible) return kInf;
  if (sol.status != milp::SolveStatus::optimal) return 0.0;
  return sol.objective;
}

}  // namespace

double robustness_radius(const TrainedModel& model, const Vector& x, SetNorm norm,
                         const EngineConfig& cfg) {
  check_point(model, x, "robustness_radius");
  if (raw_class(model, x) != 1)
    throw InputError("robustness_radius: the point does not classify +1");
  switch (model.kind()) {
    case ModelKind::linear:
      return radius_linear(model, x, norm);
    case ModelKind::tree:
      return radius_tree(model, x, norm, cfg);
    case ModelKind::ensemble:
      return radius_ensemble(model, x, norm, cfg);
    case ModelKind::relu:
      return radius_relu(model, x, norm, cfg);
  }
  throw InputError("unknown model kind");
}

}  // namespace rce
