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
#ifndef RCE_MILP_HPP
#define RCE_MILP_HPP

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "rce/types.hpp"

namespace rce::milp {

enum class Sense : int { le, eq, ge };
enum class ObjSense : int { minimize, maximize };
enum class SolveStatus : int { optimal, infeasible, unbounded, time_limit };
enum class Branching : int { most_fractional, pseudo_cost };

struct Term {
  int var = -1;
  double coef = 0.0;
};

struct VariableDef {
  std::string name;
  double lb = 0.0;
  double ub = 0.0;
  bool is_binary = false;
};

struct ConstraintDef {
  std::string name;
  std::vector<Term> row;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

/**
 * Second-order ball row: ||x[members]||_2 <= rho + x[radius_var].
 * radius_var = -1 means a constant-radius ball. Enforced lazily through
 * outer-approximation tangent cuts during solves.
 */
struct ConicDef {
  std::vector<int> members;
  double rho = 0.0;
  int radius_var = -1;
};

/**
 * A batch of variables and constraints appended atomically, e.g. one
 * scenario's worth of rows. Terms may reference existing model variables
 * by their nonnegative index, or block-local variables by the convention
 * var = -(k+1) for variables[k].
 */
struct Block {
  std::vector<VariableDef> variables;
  std::vector<ConstraintDef> constraints;
  std::vector<ConicDef> conics;
};

struct Objective {
  ObjSense sense = ObjSense::minimize;
  std::vector<Term> terms;
  double constant = 0.0;
};

/**
 * In-memory mixed-binary linear model. All variable bounds must be finite
 * and all coefficients free of NaN/infinity; violations throw ModelError.
 * Instances are plain data: cheap to copy, safe to read concurrently.
 */
class MilpModel {
 public:
  /**
   * Registers a variable and returns its index. Re-adding a variable whose
   * name, bounds, and binary flag all match is idempotent; a name collision
   * with different attributes throws ModelError.
   */
  int add_variable(const std::string& name, double lb, double ub, bool is_binary = false);

  /** Index of a registered variable; throws InputError when absent. */
  int variable(const std::string& name) const;
  bool has_variable(const std::string& name) const;

  void add_constraint(std::vector<Term> row, Sense sense, double rhs, std::string name = "");
  void add_conic(ConicDef conic);
  void set_objective(ObjSense sense, std::vector<Term> terms, double constant = 0.0);

  /** Appends a scenario block; see Block for the index convention. */
  void add_block(const Block& block);

  /** Narrows a variable's bounds in place (used to fix or restrict). */
  void set_bounds(int var, double lb, double ub);

  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }
  std::size_t num_conics() const { return conics_.size(); }
  const VariableDef& variable_def(int v) const { return vars_.at(static_cast<std::size_t>(v)); }
  const std::vector<VariableDef>& variables() const { return vars_; }
  const std::vector<ConstraintDef>& constraints() const { return rows_; }
  const std::vector<ConicDef>& conics() const { return conics_; }
  const Objective& objective() const { return objective_; }

 private:
  std::vector<VariableDef> vars_;
  std::vector<ConstraintDef> rows_;
  std::vector<ConicDef> conics_;
  Objective objective_;
  std::unordered_map<std::string, int> index_;
};

struct SolverConfig {
  double feas_tol = 1e-7;
  double int_tol = 1e-6;
  double conic_tol = 1e-7;
  double time_limit_s = 1000.0;
  int max_cuts_per_node = 200;
  Branching branching = Branching::most_fractional;
};

/**
 * Solve result. `assignment` holds one value per model variable and is
 * empty when no feasible point is known. Identical model + config give
 * identical status/objective/assignment; wall_time_s is a measurement and
 * is excluded from that guarantee.
 */
struct SolveOutcome {
  SolveStatus status = SolveStatus::infeasible;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> assignment;
  long node_count = 0;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;

  bool has_assignment() const { return !assignment.empty(); }
};

/** Solves the continuous relaxation (binaries relaxed to [0,1]), with lazy conic cuts. */
SolveOutcome solve_lp(const MilpModel& model, const SolverConfig& cfg = {});

/** Branch-and-bound over the binary variables, conic cuts at every node. */
SolveOutcome solve_milp(const MilpModel& model, const SolverConfig& cfg = {});

/** Fixed-format LP-file text export; conic rows appear as comments. */
void write_lp_file(const MilpModel& model, std::ostream& out);
std::string to_lp_string(const MilpModel& model);

}  // namespace rce::milp

#endif  // RCE_MILP_HPP
