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
#include "rce/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <tuple>

#include "rce/simplex.hpp"

namespace rce::milp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double now_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

int MilpModel::add_variable(const std::string& name, double lb, double ub, bool is_binary) {
  if (name.empty()) throw ModelError("add_variable: empty name");
  if (!std::isfinite(lb) || !std::isfinite(ub))
    throw ModelError("add_variable: bounds must be finite (" + name + ")");
  if (lb > ub) throw ModelError("add_variable: lb > ub (" + name + ")");
  if (is_binary && (lb < 0.0 || ub > 1.0))
    throw ModelError("add_variable: binary bounds must lie in [0,1] (" + name + ")");
  auto it = index_.find(name);
  if (it != index_.end()) {
    const VariableDef& v = vars_[static_cast<std::size_t>(it->second)];
    if (v.lb == lb && v.ub == ub && v.is_binary == is_binary) return it->second;
    throw ModelError("add_variable: name collision with different attributes (" + name + ")");
  }
  int idx = static_cast<int>(vars_.size());
  vars_.push_back({name, lb, ub, is_binary});
  index_.emplace(name, idx);
  return idx;
}

int MilpModel::variable(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InputError("variable: unknown name " + name);
  return it->second;
}

bool MilpModel::has_variable(const std::string& name) const { return index_.count(name) > 0; }

void MilpModel::add_constraint(std::vector<Term> row, Sense sense, double rhs, std::string name) {
  if (!std::isfinite(rhs)) throw ModelError("add_constraint: rhs must be finite");
  for (const Term& t : row) {
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
      throw ModelError("add_constraint: term references unknown variable");
    if (!std::isfinite(t.coef)) throw ModelError("add_constraint: coefficient must be finite");
  }
  rows_.push_back({std::move(name), std::move(row), sense, rhs});
}

void MilpModel::add_conic(ConicDef conic) {
  for (int v : conic.members) {
    if (v < 0 || v >= static_cast<int>(vars_.size()))
      throw ModelError("add_conic: member references unknown variable");
  }
  if (conic.radius_var >= static_cast<int>(vars_.size()))
    throw ModelError("add_conic: radius variable out of range");
  if (!std::isfinite(conic.rho) || conic.rho < 0.0)
    throw ModelError("add_conic: rho must be finite and nonnegative");
  conics_.push_back(std::move(conic));
}

void MilpModel::set_objective(ObjSense sense, std::vector<Term> terms, double constant) {
  for (const Term& t : terms) {
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
      throw ModelError("set_objective: term references unknown variable");
    if (!std::isfinite(t.coef)) throw ModelError("set_objective: coefficient must be finite");
  }
  if (!std::isfinite(constant)) throw ModelError("set_objective: constant must be finite");
  objective_ = {sense, std::move(terms), constant};
}

void MilpModel::add_block(const Block& block) {
  std::vector<int> local(block.variables.size());
  for (std::size_t k = 0; k < block.variables.size(); ++k) {
    const VariableDef& v = block.variables[k];
    local[k] = add_variable(v.name, v.lb, v.ub, v.is_binary);
  }
  auto remap = [&](int var) {
    if (var >= 0) {
      if (var >= static_cast<int>(vars_.size()))
        throw ModelError("add_block: term references unknown variable");
      return var;
    }
    std::size_t k = static_cast<std::size_t>(-var) - 1;
    if (k >= local.size()) throw ModelError("add_block: block-local index out of range");
    return local[k];
  };
  for (const ConstraintDef& c : block.constraints) {
    std::vector<Term> row = c.row;
    for (Term& t : row) t.var = remap(t.var);
    add_constraint(std::move(row), c.sense, c.rhs, c.name);
  }
  for (const ConicDef& c : block.conics) {
    ConicDef mapped = c;
    for (int& v : mapped.members) v = remap(v);
    if (mapped.radius_var != -1) mapped.radius_var = remap(mapped.radius_var);
    add_conic(std::move(mapped));
  }
}

void MilpModel::set_bounds(int var, double lb, double ub) {
  if (var < 0 || var >= static_cast<int>(vars_.size()))
    throw ModelError("set_bounds: variable out of range");
  if (!std::isfinite(lb) || !std::isfinite(ub) || lb > ub)
    throw ModelError("set_bounds: invalid bounds");
  vars_[static_cast<std::size_t>(var)].lb = lb;
  vars_[static_cast<std::size_t>(var)].ub = ub;
}

namespace {

struct Standardized {
  LpInstance base;           // bounds/cost in minimize form, no cuts
  std::vector<int> binaries;
  double obj_sign = 1.0;     // -1 when the user objective is maximize
  double obj_constant = 0.0;
};

Standardized standardize(const MilpModel& model) {
  Standardized s;
  const auto& vars = model.variables();
  s.base.num_vars = static_cast<int>(vars.size());
  s.base.lb.resize(vars.size());
  s.base.ub.resize(vars.size());
  s.base.cost.assign(vars.size(), 0.0);
  for (std::size_t j = 0; j < vars.size(); ++j) {
    s.base.lb[j] = vars[j].lb;
    s.base.ub[j] = vars[j].ub;
    if (vars[j].is_binary) s.binaries.push_back(static_cast<int>(j));
  }
  const Objective& obj = model.objective();
  s.obj_sign = (obj.sense == ObjSense::maximize) ? -1.0 : 1.0;
  s.obj_constant = obj.constant;
  for (const Term& t : obj.terms) s.base.cost[static_cast<std::size_t>(t.var)] += s.obj_sign * t.coef;
  s.base.rows.reserve(model.constraints().size());
  for (const ConstraintDef& c : model.constraints()) s.base.rows.push_back({c.row, c.sense, c.rhs});
  return s;
}

/** Max violation of the conic rows at x; picks the worst row for cutting. */
double conic_violation(const MilpModel& model, const std::vector<double>& x, int* worst) {
  double worst_v = 0.0;
  if (worst) *worst = -1;
  for (std::size_t c = 0; c < model.conics().size(); ++c) {
    const ConicDef& k = model.conics()[c];
    double nrm = 0.0;
    for (int v : k.members) nrm += x[static_cast<std::size_t>(v)] * x[static_cast<std::size_t>(v)];
    nrm = std::sqrt(nrm);
    double radius = k.rho + (k.radius_var >= 0 ? x[static_cast<std::size_t>(k.radius_var)] : 0.0);
    double viol = nrm - radius;
    if (viol > worst_v) {
      worst_v = viol;
      if (worst) *worst = static_cast<int>(c);
    }
  }
  return worst_v;
}

/** Tangent cut at x for conic row k: (x_I/||x_I||)^T s_I - radius_var <= rho. */
bool make_tangent_cut(const ConicDef& k, const std::vector<double>& x, LpInstance::Row* cut) {
  double nrm = 0.0;
  for (int v : k.members) nrm += x[static_cast<std::size_t>(v)] * x[static_cast<std::size_t>(v)];
  nrm = std::sqrt(nrm);
  if (nrm < 1e-12) return false;
  cut->terms.clear();
  for (int v : k.members)
    cut->terms.push_back({v, x[static_cast<std::size_t>(v)] / nrm});
  if (k.radius_var >= 0) cut->terms.push_back({k.radius_var, -1.0});
  cut->sense = Sense::le;
  cut->rhs = k.rho;
  return true;
}

struct NodeLpResult {
  LpResult lp;
  int cuts_added = 0;
  bool cut_cap_hit = false;
  double residual = 0.0;
};

/**
 * Solves one node LP, separating violated conic rows until clean or the
 * per-node cut cap is reached. Cuts land in the shared pool: tangents to a
 * convex ball are valid for every node.
 */
NodeLpResult solve_node_lp(const MilpModel& model, const Standardized& s,
                           const std::vector<double>& lb, const std::vector<double>& ub,
                           std::vector<LpInstance::Row>& cut_pool, const SolverConfig& cfg) {
  NodeLpResult out;
  LpInstance inst = s.base;
  inst.lb = lb;
  inst.ub = ub;
  inst.rows.insert(inst.rows.end(), cut_pool.begin(), cut_pool.end());
  for (;;) {
    out.lp = solve_dense_lp(inst, cfg.feas_tol);
    if (out.lp.status != SolveStatus::optimal) return out;
    int worst = -1;
    double viol = conic_violation(model, out.lp.x, &worst);
    if (viol <= cfg.conic_tol || worst < 0) return out;
    if (out.cuts_added >= cfg.max_cuts_per_node) {
      out.cut_cap_hit = true;
      out.residual = viol;
      return out;
    }
    LpInstance::Row cut;
    if (!make_tangent_cut(model.conics()[static_cast<std::size_t>(worst)], out.lp.x, &cut)) {
      out.cut_cap_hit = true;  // degenerate point; cannot separate
      out.residual = viol;
      return out;
    }
    cut_pool.push_back(cut);
    inst.rows.push_back(std::move(cut));
    ++out.cuts_added;
  }
}

struct PseudoCost {
  double up_sum = 0.0, down_sum = 0.0;
  long up_cnt = 0, down_cnt = 0;
};

}  // namespace

SolveOutcome solve_lp(const MilpModel& model, const SolverConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Standardized s = standardize(model);
  std::vector<LpInstance::Row> pool;
  NodeLpResult r = solve_node_lp(model, s, s.base.lb, s.base.ub, pool, cfg);
  SolveOutcome out;
  out.node_count = 1;
  out.status = r.lp.status;
  if (r.lp.status == SolveStatus::optimal) {
    out.assignment = r.lp.x;
    out.objective = s.obj_sign * r.lp.objective + s.obj_constant;
  }
  if (r.cut_cap_hit) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "conic residual violation %.3e after cut cap", r.residual);
    out.warnings.push_back(buf);
  }
  out.wall_time_s = now_seconds(t0);
  return out;
}

SolveOutcome solve_milp(const MilpModel& model, const SolverConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Standardized s = standardize(model);
  SolveOutcome out;

  struct Node {
    double bound;  // parent LP objective, minimize form
    long id;
    std::vector<std::pair<int, int>> fixings;
  };
  auto cmp = [](const Node& a, const Node& b) {
    return std::tie(a.bound, a.id) > std::tie(b.bound, b.id);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> queue(cmp);
  queue.push({-kInf, 0, {}});
  long next_id = 1;

  std::vector<LpInstance::Row> cut_pool;
  std::map<int, PseudoCost> pcost;
  double best_obj = kInf;  // minimize form
  std::vector<double> best_x;
  bool hit_time_limit = false;
  bool cut_cap_warned = false;
  bool unbounded = false;

  while (!queue.empty()) {
    if (now_seconds(t0) > cfg.time_limit_s) {
      hit_time_limit = true;
      break;
    }
    Node node = queue.top();
    queue.pop();
    if (node.bound >= best_obj - 1e-9) continue;

    std::vector<double> lb = s.base.lb, ub = s.base.ub;
    for (auto [v, val] : node.fixings) {
      lb[static_cast<std::size_t>(v)] = val;
      ub[static_cast<std::size_t>(v)] = val;
    }
    NodeLpResult r = solve_node_lp(model, s, lb, ub, cut_pool, cfg);
    ++out.node_count;
    if (r.cut_cap_hit && !cut_cap_warned) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "conic residual violation %.3e after cut cap", r.residual);
      out.warnings.push_back(buf);
      cut_cap_warned = true;
    }
    if (r.lp.status == SolveStatus::infeasible) continue;
    if (r.lp.status == SolveStatus::unbounded) {
      unbounded = true;
      break;
    }
    double node_obj = r.lp.objective;
    if (!node.fixings.empty()) {
      // Pseudo-cost bookkeeping for the fixing that created this node.
      auto [v, val] = node.fixings.back();
      double degradation = std::max(0.0, node_obj - std::max(node.bound, -1e300));
      if (std::isfinite(node.bound)) {
        PseudoCost& pc = pcost[v];
        if (val == 1) {
          pc.up_sum += degradation;
          ++pc.up_cnt;
        } else {
          pc.down_sum += degradation;
          ++pc.down_cnt;
        }
      }
    }
    if (node_obj >= best_obj - 1e-9) continue;

    int branch_var = -1;
    double branch_score = -1.0;
    for (int v : s.binaries) {
      double x = r.lp.x[static_cast<std::size_t>(v)];
      double frac = std::min(x, 1.0 - x);
      if (frac <= cfg.int_tol) continue;
      double score;
      if (cfg.branching == Branching::pseudo_cost) {
        auto it = pcost.find(v);
        if (it != pcost.end() && it->second.up_cnt > 0 && it->second.down_cnt > 0) {
          double up = it->second.up_sum / it->second.up_cnt;
          double down = it->second.down_sum / it->second.down_cnt;
          score = std::max(up * (1.0 - x), 1e-12) * std::max(down * x, 1e-12);
        } else {
          score = frac;  // no history yet: fall back to fractionality
        }
      } else {
        score = frac;
      }
      if (score > branch_score + 1e-15) {
        branch_score = score;
        branch_var = v;  // ties keep the lowest index
      }
    }

    if (branch_var < 0) {
      // Integral within tolerance. A binary off its integer by even 1e-9
      // leaks that fraction of big-M slack into its indicator rows, so the
      // relaxation point is not yet trusted as an incumbent: free binaries
      // are rounded and pinned, and the node re-solved with them exact.
      std::vector<std::pair<int, int>> pins;
      for (int v : s.binaries) {
        const std::size_t j = static_cast<std::size_t>(v);
        if (lb[j] == ub[j]) continue;
        pins.emplace_back(v, r.lp.x[j] >= 0.5 ? 1 : 0);
      }
      if (pins.empty()) {
        if (node_obj < best_obj - 1e-12) {
          best_obj = node_obj;
          best_x = r.lp.x;
        }
        continue;
      }
      std::vector<double> plb = lb, pub = ub;
      for (auto [v, val] : pins) {
        plb[static_cast<std::size_t>(v)] = val;
        pub[static_cast<std::size_t>(v)] = val;
      }
      NodeLpResult fixed = solve_node_lp(model, s, plb, pub, cut_pool, cfg);
      if (fixed.lp.status == SolveStatus::optimal) {
        if (fixed.lp.objective < best_obj - 1e-12) {
          best_obj = fixed.lp.objective;
          best_x = fixed.lp.x;
        }
        continue;
      }
      // The rounding is infeasible: the near-integral point was living off
      // big-M slack. Separate a remaining free binary exactly and search on.
      for (int v : s.binaries) {
        const std::size_t j = static_cast<std::size_t>(v);
        if (lb[j] == ub[j]) continue;
        const double xv = r.lp.x[j];
        const double frac = std::min(xv, 1.0 - xv);
        if (frac > branch_score + 1e-15) {
          branch_score = frac;
          branch_var = v;
        }
      }
      if (branch_var < 0) continue;
    }

    for (int val : {0, 1}) {
      Node child;
      child.bound = node_obj;
      child.id = next_id++;
      child.fixings = node.fixings;
      child.fixings.emplace_back(branch_var, val);
      queue.push(std::move(child));
    }
  }

  if (unbounded) {
    out.status = SolveStatus::unbounded;
  } else if (!best_x.empty()) {
    out.status = hit_time_limit ? SolveStatus::time_limit : SolveStatus::optimal;
    out.assignment = std::move(best_x);
    out.objective = s.obj_sign * best_obj + s.obj_constant;
  } else {
    out.status = hit_time_limit ? SolveStatus::time_limit : SolveStatus::infeasible;
  }
  out.wall_time_s = now_seconds(t0);
  return out;
}

namespace {

std::string lp_name(const std::string& name, const char* prefix, std::size_t i) {
  if (name.empty()) return std::string(prefix) + std::to_string(i);
  std::string cleaned = name;
  for (char& c : cleaned)
    if (c == ' ' || c == '\t') c = '_';
  return cleaned;
}

void write_terms(std::ostream& out, const std::vector<Term>& terms, const MilpModel& model) {
  if (terms.empty() || model.num_variables() == 0) {
    out << "0";
    if (model.num_variables() > 0)
      out << " " << lp_name(model.variable_def(0).name, "x", 0);
    return;
  }
  bool first = true;
  for (const Term& t : terms) {
    double c = t.coef;
    if (first) {
      if (c < 0.0) out << "- ";
      first = false;
    } else {
      out << (c < 0.0 ? " - " : " + ");
    }
    out << std::abs(c) << " " << lp_name(model.variable_def(t.var).name, "x", static_cast<std::size_t>(t.var));
  }
}

}  // namespace

void write_lp_file(const MilpModel& model, std::ostream& out) {
  const Objective& obj = model.objective();
  if (obj.constant != 0.0) out << "\\ objective constant " << obj.constant << " omitted below\n";
  out << (obj.sense == ObjSense::maximize ? "Maximize" : "Minimize") << "\n obj: ";
  write_terms(out, obj.terms, model);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < model.constraints().size(); ++i) {
    const ConstraintDef& c = model.constraints()[i];
    out << " " << lp_name(c.name, "c", i) << ": ";
    write_terms(out, c.row, model);
    switch (c.sense) {
      case Sense::le: out << " <= "; break;
      case Sense::ge: out << " >= "; break;
      case Sense::eq: out << " = "; break;
    }
    out << c.rhs << "\n";
  }
  for (std::size_t i = 0; i < model.conics().size(); ++i) {
    const ConicDef& k = model.conics()[i];
    out << "\\ conic k" << i << ": ||";
    for (std::size_t j = 0; j < k.members.size(); ++j) {
      if (j) out << ", ";
      out << lp_name(model.variable_def(k.members[j]).name, "x", static_cast<std::size_t>(k.members[j]));
    }
    out << "||_2 <= " << k.rho;
    if (k.radius_var >= 0)
      out << " + " << lp_name(model.variable_def(k.radius_var).name, "x", static_cast<std::size_t>(k.radius_var));
    out << "\n";
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    const VariableDef& v = model.variable_def(static_cast<int>(j));
    out << " " << v.lb << " <= " << lp_name(v.name, "x", j) << " <= " << v.ub << "\n";
  }
  bool any_bin = false;
  for (const auto& v : model.variables()) any_bin |= v.is_binary;
  if (any_bin) {
    out << "Binaries\n";
    for (std::size_t j = 0; j < model.num_variables(); ++j)
      if (model.variable_def(static_cast<int>(j)).is_binary)
        out << " " << lp_name(model.variable_def(static_cast<int>(j)).name, "x", j);
    out << "\n";
  }
  out << "End\n";
}

std::string to_lp_string(const MilpModel& model) {
  std::ostringstream ss;
  write_lp_file(model, ss);
  return ss.str();
}

}  // namespace rce::milp
