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
#ifndef RCE_SIMPLEX_HPP
#define RCE_SIMPLEX_HPP

#include <vector>

#include "rce/milp.hpp"

namespace rce::milp {

/**
 * Dense LP in minimize form. Structural variables carry explicit bounds
 * (finite or infinite); rows are general-sense linear constraints.
 */
struct LpInstance {
  int num_vars = 0;
  std::vector<double> lb, ub;    // size num_vars
  std::vector<double> cost;      // size num_vars, minimize
  struct Row {
    std::vector<Term> terms;
    Sense sense = Sense::le;
    double rhs = 0.0;
  };
  std::vector<Row> rows;
};

struct LpResult {
  SolveStatus status = SolveStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;  // size num_vars when status == optimal
  long iterations = 0;
};

/**
 * Two-phase primal simplex on a dense tableau with bounded variables.
 * Degeneracy stalls switch pivoting to Bland's rule after
 * 5 * (rows + columns) iterations without objective progress.
 * Throws SolverError if the iteration budget is exhausted.
 */
LpResult solve_dense_lp(const LpInstance& lp, double feas_tol = 1e-7);

}  // namespace rce::milp

#endif  // RCE_SIMPLEX_HPP
