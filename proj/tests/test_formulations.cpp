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

#include "doctest.h"
#include "fixture_util.hpp"
#include "rce/formulations.hpp"
#include "rce/milp.hpp"
#include "rce/model.hpp"
#include "rce/types.hpp"

using namespace rce;
using rce_tests::load_fixture;

namespace {

Vector solution_point(const MpProgram& mp, const milp::SolveOutcome& out) {
  Vector x(mp.x_vars.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = out.assignment[static_cast<std::size_t>(mp.x_vars[i])];
  return x;
}

int count_binaries(const milp::MilpModel& m) {
  int n = 0;
  for (const auto& v : m.variables()) n += v.is_binary ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("mp: step tree with the zero scenario gives the plain counterfactual") {
  const TrainedModel m = load_fixture("step_tree.json");
  const Vector factual{0.0, 2.0};
  MpProgram mp = build_mp_tree(m, factual, ScenarioSet::zero(2), {}, {});
  const auto out = milp::solve_milp(mp.model);
  REQUIRE(out.status == milp::SolveStatus::optimal);
  CHECK(out.objective == doctest::Approx(1.5).epsilon(1e-9));
  const Vector x = solution_point(mp, out);
  CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("mp: adding the unit-upward scenario pushes the point below the box midline") {
  const TrainedModel m = load_fixture("step_tree.json");
  const Vector factual{0.0, 2.0};
  const UncertaintySet set{SetNorm::linf, 1.0};
  ScenarioSet z = ScenarioSet::zero(2);
  z.add({0.0, 1.0}, set);
  MpProgram mp = build_mp_tree(m, factual, z, {}, {});
  const auto out = milp::solve_milp(mp.model);
  REQUIRE(out.status == milp::SolveStatus::optimal);
  CHECK(out.objective == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(solution_point(mp, out)[1] == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("mp: binary count is positive leaves times scenarios") {
  const TrainedModel m = load_fixture("depth3_tree.json");  // positive leaves: 0, 2, 4
  const UncertaintySet set{SetNorm::linf, 0.2};
  ScenarioSet z = ScenarioSet::zero(2);
  z.add({0.2, 0.0}, set);
  z.add({0.0, 0.2}, set);
  z.add({-0.2, 0.0}, set);
  MpProgram mp = build_mp_tree(m, {0.9, 0.1}, z, {}, {});
  CHECK(count_binaries(mp.model) == 12);
}

TEST_CASE("mp: relu binary count is hidden units times scenarios") {
  TrainedModel m;
  m.tau = 0.0;
  m.space = FeatureSpace::unit_box(2);
  ReluNetwork net;
  ReluNetwork::Layer h1, h2, out;
  for (int i = 0; i < 10; ++i) {
    h1.weights.push_back({0.1 * (i + 1), -0.05 * i});
    h1.bias.push_back(0.01 * i);
  }
  for (int i = 0; i < 10; ++i) {
    Vector row(10, 0.0);
    row[static_cast<std::size_t>(i)] = 0.2;
    h2.weights.push_back(row);
    h2.bias.push_back(0.0);
  }
  out.weights.push_back(Vector(10, 0.1));
  out.bias.push_back(-0.3);
  net.layers = {h1, h2, out};
  m.function = net;

  const UncertaintySet set{SetNorm::linf, 0.1};
  ScenarioSet z = ScenarioSet::zero(2);
  z.add({0.1, 0.0}, set);
  z.add({0.0, -0.1}, set);
  MpProgram mp = build_mp_relu(m, {0.5, 0.5}, z, {}, {});
  CHECK(count_binaries(mp.model) == 60);
}

TEST_CASE("mp: closed-form robust linear counterfactual") {
  const TrainedModel m = load_fixture("linear_gate.json");
  SUBCASE("positive radius lifts the boundary by rho") {
    const auto r = robust_linear_ce(m, {1.0, 0.0}, {SetNorm::linf, 0.5}, {}, {});
    REQUIRE(r.feasible);
    CHECK(r.point[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.point[1] == doctest::Approx(1.5).epsilon(1e-9));
  }
  SUBCASE("zero radius gives the plain boundary point") {
    const auto r = robust_linear_ce(m, {1.0, 0.0}, {SetNorm::linf, 0.0}, {}, {});
    REQUIRE(r.feasible);
    CHECK(r.point[1] == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("radius beyond the box reach is infeasible") {
    const auto r = robust_linear_ce(m, {1.0, 0.0}, {SetNorm::linf, 5.0}, {}, {});
    CHECK_FALSE(r.feasible);
  }
}

TEST_CASE("mp: euclidean ball tightens by the l2 dual norm") {
  TrainedModel m;
  m.tau = 1.0;
  m.space = FeatureSpace{{0.0, 0.0}, {2.0, 2.0}, {0, 0}};
  m.function = LinearModel{{1.0, 1.0}, 0.0};
  const auto r = robust_linear_ce(m, {0.0, 0.0}, {SetNorm::l2, 0.1}, {}, {});
  REQUIRE(r.feasible);
  CHECK(r.distance == doctest::Approx(1.0 + 0.1 * std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("mp: immutable features stay pinned and leave the dual norm") {
  TrainedModel m;
  m.tau = 1.0;
  m.space = FeatureSpace{{0.0, 0.0}, {2.0, 2.0}, {1, 0}};
  m.function = LinearModel{{1.0, 1.0}, 0.0};
  const auto r = robust_linear_ce(m, {0.2, 0.0}, {SetNorm::linf, 0.1}, {}, {});
  REQUIRE(r.feasible);
  CHECK(r.point[0] == doctest::Approx(0.2).epsilon(1e-12));
  // Threshold 1 + 0.1*|beta_mutable| = 1.1; with x0 pinned, x1 = 0.9.
  CHECK(r.point[1] == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("mp: one-tree ensemble matches the bare tree") {
  const TrainedModel tree = load_fixture("depth3_tree.json");
  TrainedModel ens;
  ens.tau = tree.tau;
  ens.space = tree.space;
  ens.function = TreeEnsemble{{tree.tree()}, VoteMode::average};

  const Vector factual{0.9, 0.1};
  const UncertaintySet set{SetNorm::linf, 0.1};
  ScenarioSet z = ScenarioSet::zero(2);
  z.add({0.1, 0.1}, set);
  MpProgram a = build_mp_tree(tree, factual, z, {}, {});
  MpProgram b = build_mp_ensemble(ens, factual, z, {}, {});
  const auto ra = milp::solve_milp(a.model);
  const auto rb = milp::solve_milp(b.model);
  REQUIRE(ra.status == milp::SolveStatus::optimal);
  REQUIRE(rb.status == milp::SolveStatus::optimal);
  CHECK(ra.objective == doctest::Approx(rb.objective).epsilon(1e-9));
}

TEST_CASE("mp: duplicated trees do not change the ensemble optimum") {
  const TrainedModel tree = load_fixture("step_tree.json");
  TrainedModel ens;
  ens.tau = tree.tau;
  ens.space = tree.space;
  ens.function = TreeEnsemble{{tree.tree(), tree.tree()}, VoteMode::average};

  const UncertaintySet set{SetNorm::linf, 1.0};
  ScenarioSet z = ScenarioSet::zero(2);
  z.add({0.0, 1.0}, set);
  MpProgram mp = build_mp_ensemble(ens, {0.0, 2.0}, z, {}, {});
  const auto out = milp::solve_milp(mp.model);
  REQUIRE(out.status == milp::SolveStatus::optimal);
  CHECK(out.objective == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("mp: staggered ensemble tie counts as positive") {
  const TrainedModel m = load_fixture("staggered_ensemble.json");
  MpProgram mp = build_mp_ensemble(m, {0.9, 0.5}, ScenarioSet::zero(2), {}, {});
  const auto out = milp::solve_milp(mp.model);
  REQUIRE(out.status == milp::SolveStatus::optimal);
  // Average 0.5 >= tau already at x1 = 0.6, where only the wider tree votes 1.
  CHECK(out.objective == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(solution_point(mp, out)[0] == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("mp: growing the scenario set never improves the objective") {
  const TrainedModel m = load_fixture("depth3_tree.json");
  const Vector factual{0.9, 0.1};
  const EngineConfig cfg;
  MpProgram mp = build_mp(m, factual, ScenarioSet::zero(2), {}, cfg);
  double prev = milp::solve_milp(mp.model).objective;
  const Vector additions[] = {{0.15, 0.0}, {0.0, 0.15}, {-0.15, -0.15}};
  for (const Vector& s : additions) {
    append_scenario(mp, m, s, cfg);
    const auto out = milp::solve_milp(mp.model);
    REQUIRE(out.status == milp::SolveStatus::optimal);
    CHECK(out.objective >= prev - 1e-9);
    prev = out.objective;
  }
}

TEST_CASE("mp: weighted distances scale the objective") {
  TrainedModel m;
  m.tau = 0.5;
  m.space = FeatureSpace::unit_box(2);
  DecisionTree t;
  t.leaves.push_back({0, 1.0, {{{-1.0, 0.0}, -0.6, false}, {{0.0, -1.0}, -0.5, false}}});
  t.leaves.push_back({1, 0.0, {{{1.0, 0.0}, 0.6, true}}});
  t.leaves.push_back({2, 0.0, {{{-1.0, 0.0}, -0.6, false}, {{0.0, 1.0}, 0.5, true}}});
  m.function = t;

  DistanceSpec dist;
  dist.weights = {2.0, 1.0};
  MpProgram mp = build_mp_tree(m, {0.5, 0.2}, ScenarioSet::zero(2), dist, {});
  const auto out = milp::solve_milp(mp.model);
  REQUIRE(out.status == milp::SolveStatus::optimal);
  CHECK(out.objective == doctest::Approx(2.0 * 0.1 + 1.0 * 0.3).epsilon(1e-9));
}

TEST_CASE("mp: a tree with no positive leaf is certified infeasible") {
  TrainedModel m;
  m.tau = 0.5;
  m.space = FeatureSpace::unit_box(2);
  DecisionTree t;
  t.leaves.push_back({0, 0.3, {{{1.0, 0.0}, 0.5, false}}});
  t.leaves.push_back({1, 0.4, {{{-1.0, 0.0}, -0.5, true}}});
  m.function = t;
  MpProgram mp = build_mp_tree(m, {0.5, 0.5}, ScenarioSet::zero(2), {}, {});
  CHECK(milp::solve_milp(mp.model).status == milp::SolveStatus::infeasible);
}

TEST_CASE("mp: scenario set validates its entries") {
  const UncertaintySet set{SetNorm::l2, 0.5};
  ScenarioSet z = ScenarioSet::zero(2);
  CHECK_THROWS_AS(z.add({0.4, 0.4}, set), InputError);       // l2 norm 0.566 > rho
  CHECK_THROWS_AS(z.add({0.1}, set), InputError);            // dimension mismatch
  CHECK_THROWS_AS(z.add({0.1, std::nan("")}, set), InputError);
  z.add({0.3, 0.4}, set);                                    // norm exactly rho
  CHECK(z.size() == 2);
}
