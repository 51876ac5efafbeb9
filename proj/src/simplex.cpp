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
#include "rce/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rce::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kRatioTieTol = 1e-12;

/**
 * Dense bounded-variable tableau. Column layout: structural variables,
 * one slack per row, then artificials. Basic values live in xval; the
 * matrix T always equals B^-1 A for the current basis.
 */
struct Tableau {
  int m = 0;
  int n = 0;
  std::vector<double> T;  // m * n, row-major
  std::vector<double> lo, up;
  std::vector<double> xval;
  std::vector<int> basis;      // row -> column
  std::vector<char> in_basis;  // column flag
  std::vector<char> at_upper;  // nonbasic side flag

  double& a(int i, int j) { return T[static_cast<std::size_t>(i) * n + j]; }
  double a(int i, int j) const { return T[static_cast<std::size_t>(i) * n + j]; }

  bool fixed(int j) const { return lo[j] == up[j]; }
  bool free_var(int j) const { return lo[j] == -kInf && up[j] == kInf; }
};

enum class PhaseStatus { optimal, unbounded, iteration_limit };

double phase_objective(const Tableau& tb, const std::vector<double>& cost) {
  double obj = 0.0;
  for (int j = 0; j < tb.n; ++j)
    if (cost[j] != 0.0) obj += cost[j] * tb.xval[j];
  return obj;
}

void reduced_costs(const Tableau& tb, const std::vector<double>& cost, std::vector<double>& d) {
  d.assign(cost.begin(), cost.end());
  for (int i = 0; i < tb.m; ++i) {
    double cb = cost[tb.basis[i]];
    if (cb == 0.0) continue;
    const double* row = &tb.T[static_cast<std::size_t>(i) * tb.n];
    for (int j = 0; j < tb.n; ++j) d[j] -= cb * row[j];
  }
}

void pivot(Tableau& tb, int r, int e) {
  double piv = tb.a(r, e);
  double* prow = &tb.T[static_cast<std::size_t>(r) * tb.n];
  double inv = 1.0 / piv;
  for (int j = 0; j < tb.n; ++j) prow[j] *= inv;
  prow[e] = 1.0;
  for (int i = 0; i < tb.m; ++i) {
    if (i == r) continue;
    double f = tb.a(i, e);
    if (std::abs(f) < 1e-13) {
      tb.a(i, e) = 0.0;
      continue;
    }
    double* row = &tb.T[static_cast<std::size_t>(i) * tb.n];
    for (int j = 0; j < tb.n; ++j) row[j] -= f * prow[j];
    row[e] = 0.0;
  }
}

/**
 * Primal simplex iterations for one phase. Dantzig pricing by default;
 * permanently switches to Bland's rule after 5*(m+n) iterations without
 * objective progress, which guarantees finite termination.
 */
PhaseStatus run_phase(Tableau& tb, const std::vector<double>& cost, long& iterations) {
  const long stall_budget = 5L * (tb.m + tb.n);
  const long hard_cap = 1000L + 200L * (tb.m + tb.n);
  bool bland = false;
  long stalled = 0;
  double best_obj = phase_objective(tb, cost);
  std::vector<double> d;

  for (long it = 0; it < hard_cap; ++it, ++iterations) {
    reduced_costs(tb, cost, d);

    int enter = -1;
    int dir = 0;
    double best_score = kDualTol;
    for (int j = 0; j < tb.n; ++j) {
      if (tb.in_basis[j] || tb.fixed(j)) continue;
      int cand_dir = 0;
      if (tb.free_var(j)) {
        if (d[j] < -kDualTol)
          cand_dir = 1;
        else if (d[j] > kDualTol)
          cand_dir = -1;
      } else if (!tb.at_upper[j] && d[j] < -kDualTol) {
        cand_dir = 1;
      } else if (tb.at_upper[j] && d[j] > kDualTol) {
        cand_dir = -1;
      }
      if (cand_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = cand_dir;
        break;
      }
      double score = std::abs(d[j]);
      if (score > best_score) {
        best_score = score;
        enter = j;
        dir = cand_dir;
      }
    }
    if (enter < 0) return PhaseStatus::optimal;

    // Ratio test: largest step t >= 0 keeping all basic variables in bounds,
    // capped by the entering variable's own opposite bound (bound flip).
    double t_best = kInf;
    if (tb.lo[enter] > -kInf && tb.up[enter] < kInf) t_best = tb.up[enter] - tb.lo[enter];
    int leave_row = -1;
    bool leave_to_upper = false;
    double leave_pivot = 0.0;
    for (int i = 0; i < tb.m; ++i) {
      double u = tb.a(i, enter);
      if (std::abs(u) <= kPivotTol) continue;
      double delta = -dir * u;  // basic value change per unit step
      int k = tb.basis[i];
      double cap;
      bool to_upper;
      if (delta > 0.0) {
        cap = (tb.up[k] < kInf) ? (tb.up[k] - tb.xval[k]) / delta : kInf;
        to_upper = true;
      } else {
        cap = (tb.lo[k] > -kInf) ? (tb.xval[k] - tb.lo[k]) / (-delta) : kInf;
        to_upper = false;
      }
      if (cap == kInf) continue;
      cap = std::max(cap, 0.0);
      bool better = cap < t_best - kRatioTieTol;
      bool tie = !better && cap <= t_best + kRatioTieTol && leave_row >= 0;
      if (tie) {
        // Prefer the numerically larger pivot, then the lower basis index.
        if (std::abs(u) > std::abs(leave_pivot) + kRatioTieTol ||
            (std::abs(std::abs(u) - std::abs(leave_pivot)) <= kRatioTieTol &&
             k < tb.basis[leave_row])) {
          better = true;
          t_best = std::min(t_best, cap);
        }
      } else if (!better && leave_row < 0 && cap <= t_best + kRatioTieTol) {
        better = true;  // first blocking row at the flip cap
        t_best = std::min(t_best, cap);
      }
      if (better) {
        if (cap < t_best) t_best = cap;
        leave_row = i;
        leave_to_upper = to_upper;
        leave_pivot = u;
      }
    }

    if (t_best == kInf) return PhaseStatus::unbounded;

    // Apply the step to all basic values and the entering variable.
    if (t_best != 0.0) {
      for (int i = 0; i < tb.m; ++i) {
        double u = tb.a(i, enter);
        if (u != 0.0) tb.xval[tb.basis[i]] -= dir * u * t_best;
      }
      tb.xval[enter] += dir * t_best;
    }

    if (leave_row < 0) {
      // Bound flip: entering variable traverses to its opposite bound.
      tb.at_upper[enter] = !tb.at_upper[enter];
      tb.xval[enter] = tb.at_upper[enter] ? tb.up[enter] : tb.lo[enter];
    } else {
      int leave = tb.basis[leave_row];
      tb.in_basis[leave] = 0;
      tb.at_upper[leave] = leave_to_upper;
      tb.xval[leave] = leave_to_upper ? tb.up[leave] : tb.lo[leave];
      tb.basis[leave_row] = enter;
      tb.in_basis[enter] = 1;
      pivot(tb, leave_row, enter);
    }

    double obj = phase_objective(tb, cost);
    if (obj < best_obj - 1e-12 * (1.0 + std::abs(best_obj))) {
      best_obj = obj;
      stalled = 0;
    } else if (++stalled > stall_budget) {
      bland = true;
    }
  }
  return PhaseStatus::iteration_limit;
}

}  // namespace

LpResult solve_dense_lp(const LpInstance& lp, double feas_tol) {
  const int ns = lp.num_vars;
  const int m = static_cast<int>(lp.rows.size());
  if (static_cast<int>(lp.lb.size()) != ns || static_cast<int>(lp.ub.size()) != ns ||
      static_cast<int>(lp.cost.size()) != ns)
    throw InputError("solve_dense_lp: inconsistent instance arrays");

  // Column layout: structural | slack per row | artificials (appended below).
  struct ArtDef {
    int row;
    double sigma;
    double value;
  };
  std::vector<ArtDef> arts;

  std::vector<double> lo(lp.lb), up(lp.ub);
  std::vector<double> xval(static_cast<std::size_t>(ns), 0.0);
  std::vector<char> at_upper(static_cast<std::size_t>(ns), 0);
  for (int j = 0; j < ns; ++j) {
    if (lo[j] > up[j]) return {SolveStatus::infeasible, 0.0, {}, 0};
    if (lo[j] > -kInf) {
      xval[j] = lo[j];
    } else if (up[j] < kInf) {
      xval[j] = up[j];
      at_upper[j] = 1;
    } else {
      xval[j] = 0.0;
    }
  }

  // Dense structural matrix with duplicate terms merged.
  std::vector<double> A(static_cast<std::size_t>(m) * ns, 0.0);
  for (int i = 0; i < m; ++i) {
    for (const Term& t : lp.rows[i].terms) {
      if (t.var < 0 || t.var >= ns) throw InputError("solve_dense_lp: term index out of range");
      A[static_cast<std::size_t>(i) * ns + t.var] += t.coef;
    }
  }

  // Bound-fixed columns fold into the right-hand sides before the tableau
  // is built: keeping a pinned binary's big-M term alive would put every
  // pivot at M scale and smear ~1e-13 of noise over the O(1) geometry.
  std::vector<double> rhs(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) rhs[i] = lp.rows[i].rhs;
  for (int j = 0; j < ns; ++j) {
    if (lo[j] != up[j]) continue;
    for (int i = 0; i < m; ++i) {
      double& coef = A[static_cast<std::size_t>(i) * ns + j];
      if (coef != 0.0) {
        rhs[i] -= coef * lo[j];
        coef = 0.0;
      }
    }
  }

  std::vector<int> basis(static_cast<std::size_t>(m), -1);
  std::vector<double> slack_lo(m), slack_up(m), slack_val(m, 0.0);
  std::vector<char> slack_at_upper(m, 0);
  std::vector<double> row_scale(m, 1.0);

  for (int i = 0; i < m; ++i) {
    double v = rhs[i];
    for (int j = 0; j < ns; ++j) v -= A[static_cast<std::size_t>(i) * ns + j] * xval[j];
    switch (lp.rows[i].sense) {
      case Sense::le:
        slack_lo[i] = 0.0;
        slack_up[i] = kInf;
        if (v >= -feas_tol) {
          basis[i] = ns + i;
          slack_val[i] = std::max(v, 0.0);
        } else {
          slack_val[i] = 0.0;
          arts.push_back({i, -1.0, -v});
        }
        break;
      case Sense::ge:
        slack_lo[i] = -kInf;
        slack_up[i] = 0.0;
        slack_at_upper[i] = 1;
        if (v <= feas_tol) {
          basis[i] = ns + i;
          slack_val[i] = std::min(v, 0.0);
        } else {
          slack_val[i] = 0.0;
          arts.push_back({i, 1.0, v});
        }
        break;
      case Sense::eq:
        slack_lo[i] = 0.0;
        slack_up[i] = 0.0;
        // Equality rows always carry the artificial as the basic variable.
        arts.push_back({i, v < 0.0 ? -1.0 : 1.0, std::abs(v)});
        break;
    }
  }

  const int na = static_cast<int>(arts.size());
  const int n = ns + m + na;

  Tableau tb;
  tb.m = m;
  tb.n = n;
  tb.T.assign(static_cast<std::size_t>(m) * n, 0.0);
  tb.lo.resize(n);
  tb.up.resize(n);
  tb.xval.resize(n);
  tb.basis = basis;
  tb.in_basis.assign(n, 0);
  tb.at_upper.assign(n, 0);

  for (int j = 0; j < ns; ++j) {
    tb.lo[j] = lo[j];
    tb.up[j] = up[j];
    tb.xval[j] = xval[j];
    tb.at_upper[j] = at_upper[j];
  }
  for (int i = 0; i < m; ++i) {
    tb.lo[ns + i] = slack_lo[i];
    tb.up[ns + i] = slack_up[i];
    tb.xval[ns + i] = slack_val[i];
    tb.at_upper[ns + i] = slack_at_upper[i];
  }
  for (int k = 0; k < na; ++k) {
    tb.lo[ns + m + k] = 0.0;
    tb.up[ns + m + k] = kInf;
    tb.xval[ns + m + k] = arts[k].value;
    tb.basis[arts[k].row] = ns + m + k;
    row_scale[arts[k].row] = arts[k].sigma;
  }
  for (int i = 0; i < m; ++i) tb.in_basis[tb.basis[i]] = 1;

  // T = B^-1 A: rows whose basic column is -e_i are normalized by -1.
  for (int i = 0; i < m; ++i) {
    double s = row_scale[i];
    for (int j = 0; j < ns; ++j) tb.a(i, j) = s * A[static_cast<std::size_t>(i) * ns + j];
    tb.a(i, ns + i) = s;
  }
  for (int k = 0; k < na; ++k) tb.a(arts[k].row, ns + m + k) = 1.0;  // sigma * sigma

  LpResult result;
  result.iterations = 0;

  if (na > 0) {
    std::vector<double> cost1(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < na; ++k) cost1[ns + m + k] = 1.0;
    PhaseStatus st = run_phase(tb, cost1, result.iterations);
    if (st == PhaseStatus::iteration_limit)
      throw SolverError("simplex: phase-1 iteration budget exhausted");
    double infeas = phase_objective(tb, cost1);
    double scale = 0.0;
    for (double b : rhs) scale = std::max(scale, std::abs(b));
    if (infeas > std::max(1e-10, 1e-9 * (1.0 + scale))) {
      result.status = SolveStatus::infeasible;
      return result;
    }
    // Drive remaining artificials out of the basis (degenerate pivots);
    // rows admitting none are redundant and keep a frozen artificial.
    for (int i = 0; i < m; ++i) {
      int b = tb.basis[i];
      if (b < ns + m) continue;
      int piv_col = -1;
      for (int j = 0; j < ns + m; ++j) {
        if (tb.in_basis[j] || tb.fixed(j)) continue;
        if (std::abs(tb.a(i, j)) > kPivotTol) {
          piv_col = j;
          break;
        }
      }
      if (piv_col < 0) continue;
      tb.in_basis[b] = 0;
      tb.at_upper[b] = 0;
      tb.xval[b] = 0.0;
      tb.basis[i] = piv_col;
      tb.in_basis[piv_col] = 1;  // degenerate entry: value stays at its bound
      pivot(tb, i, piv_col);
    }
    for (int k = 0; k < na; ++k) {
      int col = ns + m + k;
      tb.lo[col] = 0.0;
      tb.up[col] = 0.0;
      if (!tb.in_basis[col]) tb.xval[col] = 0.0;
    }
  }

  std::vector<double> cost2(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < ns; ++j) cost2[j] = lp.cost[j];
  PhaseStatus st = run_phase(tb, cost2, result.iterations);
  if (st == PhaseStatus::iteration_limit)
    throw SolverError("simplex: phase-2 iteration budget exhausted");
  if (st == PhaseStatus::unbounded) {
    result.status = SolveStatus::unbounded;
    return result;
  }

  // Residual infeasibility hides in frozen basic artificials, invisible to
  // slack bounds, so feasibility is re-measured on the original rows. Big-M
  // terms cancel exactly at bound-fixed binaries, keeping the activity error
  // near machine precision even when row magnitudes reach the M scale.
  for (int i = 0; i < m; ++i) {
    double act = 0.0;
    double mag = 0.0;
    for (int j = 0; j < ns; ++j) {
      const double term = A[static_cast<std::size_t>(i) * ns + j] * tb.xval[j];
      act += term;
      mag += std::abs(term);
    }
    const double tol = std::max(1e-8, 1e-10 * (1.0 + std::abs(rhs[i]) + mag));
    double viol = 0.0;
    switch (lp.rows[i].sense) {
      case Sense::le: viol = act - rhs[i]; break;
      case Sense::ge: viol = rhs[i] - act; break;
      case Sense::eq: viol = std::abs(act - rhs[i]); break;
    }
    if (viol > tol) {
      result.status = SolveStatus::infeasible;
      return result;
    }
  }

  result.status = SolveStatus::optimal;
  result.x.assign(tb.xval.begin(), tb.xval.begin() + ns);
  result.objective = 0.0;
  for (int j = 0; j < ns; ++j) result.objective += lp.cost[j] * result.x[j];
  return result;
}

}  // namespace rce::milp
