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
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "milp_corpus.hpp"
#include "rce/milp.hpp"
#include "rce/oracle.hpp"
#include "rce/simplex.hpp"

using namespace rce::milp;

namespace {

double eval_objective(const MilpModel& m, const std::vector<double>& x) {
  double v = m.objective().constant;
  for (const Term& t : m.objective().terms) v += t.coef * x[static_cast<std::size_t>(t.var)];
  return v;
}

double max_row_violation(const MilpModel& m, const std::vector<double>& x) {
  double worst = 0.0;
  for (const ConstraintDef& c : m.constraints()) {
    double lhs = 0.0;
    for (const Term& t : c.row) lhs += t.coef * x[static_cast<std::size_t>(t.var)];
    double v = 0.0;
    switch (c.sense) {
      case Sense::le: v = lhs - c.rhs; break;
      case Sense::ge: v = c.rhs - lhs; break;
      case Sense::eq: v = std::abs(lhs - c.rhs); break;
    }
    worst = std::max(worst, v);
  }
  for (const ConicDef& k : m.conics()) {
    double nrm = 0.0;
    for (int v : k.members) nrm += x[static_cast<std::size_t>(v)] * x[static_cast<std::size_t>(v)];
    double radius = k.rho + (k.radius_var >= 0 ? x[static_cast<std::size_t>(k.radius_var)] : 0.0);
    worst = std::max(worst, std::sqrt(nrm) - radius);
  }
  return worst;
}

}  // namespace

TEST_CASE("lp: single bound-constrained maximization") {
  MilpModel m;
  int x1 = m.add_variable("x1", 0, 10);
  m.add_variable("x2", 0, 10);
  m.add_constraint({{x1, 1.0}}, Sense::le, 3.0);
  m.set_objective(ObjSense::maximize, {{x1, 1.0}});
  auto r = solve_lp(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.assignment[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("lp: simplex walks to a vertex of the simplex constraint") {
  MilpModel m;
  int x1 = m.add_variable("x1", 0, 1);
  int x2 = m.add_variable("x2", 0, 1);
  m.add_constraint({{x1, 1.0}, {x2, 1.0}}, Sense::ge, 1.0);
  m.set_objective(ObjSense::minimize, {{x1, 1.0}, {x2, 1.0}});
  auto r = solve_lp(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lp: crossing bounds are infeasible") {
  MilpModel m;
  int x1 = m.add_variable("x1", 0, 10);
  m.add_constraint({{x1, 1.0}}, Sense::le, 0.0);
  m.add_constraint({{x1, 1.0}}, Sense::ge, 1.0);
  m.set_objective(ObjSense::minimize, {{x1, 1.0}});
  CHECK(solve_lp(m).status == SolveStatus::infeasible);
}

TEST_CASE("lp: equality rows and negative lower bounds") {
  MilpModel m;
  int x = m.add_variable("x", -5, 5);
  int y = m.add_variable("y", -5, 5);
  m.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::eq, 1.0);
  m.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::le, 4.0);
  m.set_objective(ObjSense::minimize, {{x, 1.0}});
  auto r = solve_lp(m);
  REQUIRE(r.status == SolveStatus::optimal);
  // x minimal with x+y=1, y <= 5: x = -4.
  CHECK(r.objective == doctest::Approx(-4.0).epsilon(1e-9));
  CHECK(r.assignment[0] + r.assignment[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("simplex kernel: unbounded detection with open bounds") {
  LpInstance lp;
  lp.num_vars = 1;
  lp.lb = {0.0};
  lp.ub = {std::numeric_limits<double>::infinity()};
  lp.cost = {-1.0};  // minimize -x == maximize x, no rows
  auto r = solve_dense_lp(lp);
  CHECK(r.status == SolveStatus::unbounded);
}

TEST_CASE("simplex kernel: degenerate cycling instance terminates correctly") {
  // Classic stalling construction; optimum -1/20 at x = (1/25, 0, 1, 0).
  LpInstance lp;
  lp.num_vars = 4;
  double inf = std::numeric_limits<double>::infinity();
  lp.lb = {0, 0, 0, 0};
  lp.ub = {inf, inf, inf, inf};
  lp.cost = {-0.75, 150.0, -0.02, 6.0};
  lp.rows.push_back({{{0, 0.25}, {1, -60.0}, {2, -1.0 / 25.0}, {3, 9.0}}, Sense::le, 0.0});
  lp.rows.push_back({{{0, 0.5}, {1, -90.0}, {2, -1.0 / 50.0}, {3, 3.0}}, Sense::le, 0.0});
  lp.rows.push_back({{{2, 1.0}}, Sense::le, 1.0});
  auto r = solve_dense_lp(lp);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(-0.05).epsilon(1e-9));
}

TEST_CASE("milp: three-item knapsack") {
  MilpModel m;
  int x1 = m.add_variable("x1", 0, 1, true);
  int x2 = m.add_variable("x2", 0, 1, true);
  int x3 = m.add_variable("x3", 0, 1, true);
  m.add_constraint({{x1, 2.0}, {x2, 3.0}, {x3, 1.0}}, Sense::le, 4.0);
  m.set_objective(ObjSense::maximize, {{x1, 3.0}, {x2, 4.0}, {x3, 2.0}});
  auto r = solve_milp(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(r.assignment[static_cast<std::size_t>(x2)] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.assignment[static_cast<std::size_t>(x3)] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("milp: integral relaxation closes at the root node") {
  MilpModel m;
  int x = m.add_variable("x", 0, 1, true);
  m.add_constraint({{x, 1.0}}, Sense::ge, 1.0);
  m.set_objective(ObjSense::minimize, {{x, 1.0}});
  auto r = solve_milp(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.node_count == 1);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("conic ball: tangent cuts reach the sqrt(2) corner") {
  MilpModel m;
  int s1 = m.add_variable("s1", -1, 1);
  int s2 = m.add_variable("s2", -1, 1);
  m.add_conic({{s1, s2}, 1.0, -1});
  m.set_objective(ObjSense::maximize, {{s1, 1.0}, {s2, 1.0}});
  auto r = solve_lp(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(std::abs(r.objective - 1.41421356237) < 1e-5);
  // Same optimum through the branch-and-bound entry (no binaries present).
  auto rm = solve_milp(m);
  REQUIRE(rm.status == SolveStatus::optimal);
  CHECK(std::abs(rm.objective - 1.41421356237) < 1e-5);
}

TEST_CASE("conic ball with variable radius: minimal enclosing radius") {
  MilpModel m;
  int s1 = m.add_variable("s1", 1, 1);
  int s2 = m.add_variable("s2", 1, 1);
  int t = m.add_variable("t", 0, 10);
  m.add_conic({{s1, s2}, 0.0, t});
  m.set_objective(ObjSense::minimize, {{t, 1.0}});
  auto r = solve_lp(m);
  REQUIRE(r.status == SolveStatus::optimal);
  // ||(1,1)|| <= t: optimum sqrt(2), reached from below by the cut loop.
  CHECK(std::abs(r.objective - 1.41421356237) < 1e-5);
}

TEST_CASE("milp solves are deterministic") {
  auto build = [] {
    MilpModel m;
    for (int j = 0; j < 6; ++j) m.add_variable("x" + std::to_string(j), 0, 1, true);
    m.add_constraint({{0, 3.0}, {1, 5.0}, {2, 4.0}, {3, 1.0}, {4, 4.0}, {5, 3.0}}, Sense::le, 9.0);
    m.add_constraint({{0, 1.0}, {2, 1.0}, {4, 1.0}}, Sense::ge, 1.0);
    m.set_objective(ObjSense::maximize,
                    {{0, 5.0}, {1, 4.0}, {2, 6.0}, {3, 1.0}, {4, 3.0}, {5, 2.0}});
    return m;
  };
  auto a = solve_milp(build());
  auto b = solve_milp(build());
  CHECK(a.status == b.status);
  CHECK(a.objective == b.objective);
  CHECK(a.node_count == b.node_count);
  REQUIRE(a.assignment.size() == b.assignment.size());
  for (std::size_t i = 0; i < a.assignment.size(); ++i) CHECK(a.assignment[i] == b.assignment[i]);
}

TEST_CASE("model: variable registry semantics") {
  MilpModel m;
  int v = m.add_variable("x", 0, 1);
  CHECK(m.add_variable("x", 0, 1) == v);  // identical re-add is idempotent
  CHECK_THROWS_AS(m.add_variable("x", 0, 2), rce::ModelError);
  CHECK_THROWS_AS(m.add_variable("y", 0, std::numeric_limits<double>::infinity()),
                  rce::ModelError);
  CHECK_THROWS_AS(m.add_variable("b", -0.5, 1, true), rce::ModelError);
  CHECK(m.variable("x") == v);
  CHECK_THROWS_AS(m.variable("zz"), rce::InputError);
}

TEST_CASE("model: scenario blocks append atomically") {
  MilpModel m;
  int x = m.add_variable("x", 0, 1);
  m.set_objective(ObjSense::minimize, {{x, 1.0}});
  Block b1;
  b1.variables.push_back({"s0_w", 0, 5, false});
  b1.constraints.push_back({"", {{x, 1.0}, {-1, 2.0}}, Sense::le, 4.0});
  Block b2;
  b2.variables.push_back({"s1_w", 0, 5, false});
  b2.constraints.push_back({"", {{x, 1.0}, {-1, 2.0}}, Sense::le, 4.0});
  b2.constraints.push_back({"", {{-1, 1.0}}, Sense::ge, 0.5});
  m.add_block(b1);
  CHECK(m.num_constraints() == 1);
  CHECK(m.num_variables() == 2);
  m.add_block(b2);
  CHECK(m.num_constraints() == 3);  // block rows accumulate
  CHECK(m.num_variables() == 3);
  // The second block's rows reference its own local variable.
  const auto& last = m.constraints().back();
  CHECK(last.row[0].var == m.variable("s1_w"));
}

TEST_CASE("lp export carries every section") {
  MilpModel m;
  int x = m.add_variable("x", 0, 1, true);
  int y = m.add_variable("y", -1, 2);
  m.add_constraint({{x, 1.0}, {y, -2.0}}, Sense::ge, -1.0, "row a");
  m.add_conic({{y}, 0.5, -1});
  m.set_objective(ObjSense::minimize, {{x, 1.0}, {y, 1.0}});
  std::string text = to_lp_string(m);
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("row_a:") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(text.find("Binaries") != std::string::npos);
  CHECK(text.find("conic") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}

TEST_CASE("zero time limit reports time_limit status") {
  MilpModel m;
  for (int j = 0; j < 8; ++j) m.add_variable("x" + std::to_string(j), 0, 1, true);
  std::vector<Term> row, obj;
  for (int j = 0; j < 8; ++j) {
    row.push_back({j, 1.0 + 0.1 * j});
    obj.push_back({j, 1.0 + 0.3 * j});
  }
  m.add_constraint(row, Sense::le, 4.0);
  m.set_objective(ObjSense::maximize, obj);
  SolverConfig cfg;
  cfg.time_limit_s = 0.0;
  CHECK(solve_milp(m, cfg).status == SolveStatus::time_limit);
}

TEST_CASE("branch-and-bound matches full enumeration on the mixed corpus") {
  auto corpus = rce_tests::milp_corpus(25);
  SolverConfig cfg;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CAPTURE(i);
    auto fast = solve_milp(corpus[i], cfg);
    auto slow = rce::oracle::enumerate_milp(corpus[i], cfg);
    CHECK(fast.status == slow.status);
    if (fast.status == SolveStatus::optimal) {
      CHECK(std::abs(fast.objective - slow.objective) < 1e-6);
      CHECK(std::abs(eval_objective(corpus[i], fast.assignment) - fast.objective) < 1e-9);
      CHECK(max_row_violation(corpus[i], fast.assignment) < 2e-7);
      for (std::size_t j = 0; j < corpus[i].num_variables(); ++j) {
        if (!corpus[i].variable_def(static_cast<int>(j)).is_binary) continue;
        double v = fast.assignment[j];
        CHECK(std::min(v, 1.0 - v) < 1e-6 + 1e-12);
      }
    }
  }
}

TEST_CASE("enumeration refuses oversized instances") {
  MilpModel m;
  std::vector<Term> obj;
  for (int j = 0; j < 13; ++j) obj.push_back({m.add_variable("x" + std::to_string(j), 0, 1, true), 1.0});
  m.set_objective(ObjSense::maximize, obj);
  CHECK_THROWS_AS(rce::oracle::enumerate_milp(m), rce::InputError);
}

TEST_CASE("pseudo-cost branching reaches the same optimum") {
  auto corpus = rce_tests::milp_corpus(10);
  SolverConfig mf, pc;
  pc.branching = Branching::pseudo_cost;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CAPTURE(i);
    auto a = solve_milp(corpus[i], mf);
    auto b = solve_milp(corpus[i], pc);
    CHECK(a.status == b.status);
    if (a.status == SolveStatus::optimal) CHECK(std::abs(a.objective - b.objective) < 1e-6);
  }
}
