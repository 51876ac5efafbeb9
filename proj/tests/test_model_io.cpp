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
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "fixture_util.hpp"
#include "json.hpp"
#include "rce/model.hpp"
#include "rce/model_io.hpp"
#include "rce/types.hpp"

using namespace rce;
using rce_tests::box_sample;
using rce_tests::fixture_path;
using rce_tests::load_fixture;

namespace {

std::string temp_json(const std::string& stem, const std::string& content) {
  const std::string path = "/tmp/rce_io_" + stem + ".json";
  std::ofstream f(path);
  f << content;
  return path;
}

/** Runs load_model and returns the diagnostic text; fails the test on success. */
std::string load_error(const std::string& path) {
  try {
    (void)load_model(path);
  } catch (const ModelError& e) {
    return e.what();
  }
  FAIL("expected a schema diagnostic for ", path);
  return {};
}

}  // namespace

TEST_CASE("io: every fixture survives a save/load round trip") {
  for (const char* name : {"linear_gate.json", "step_tree.json", "depth3_tree.json",
                           "straddle_tree.json", "thin_strips_tree.json",
                           "staggered_ensemble.json", "fold_net.json"}) {
    const TrainedModel a = load_fixture(name);
    const std::string tmp = "/tmp/rce_io_roundtrip.json";
    save_model(a, tmp);
    const TrainedModel b = load_model(tmp);
    REQUIRE(b.kind() == a.kind());
    CHECK(b.tau == a.tau);
    REQUIRE(b.space.dim() == a.space.dim());
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
      const Vector x = box_sample(a.space, rng);
      CHECK(raw_score(a, x) == doctest::Approx(raw_score(b, x)).epsilon(1e-15));
    }
    std::remove(tmp.c_str());
  }
}

TEST_CASE("io: diagnostics name the offending field") {
  const std::string missing_beta = temp_json("missing_beta", R"({
    "version": 1, "kind": "linear", "tau": 0.0,
    "space": {"lower": [0, 0], "upper": [1, 1]},
    "params": {"beta0": -1.0}
  })");
  CHECK(load_error(missing_beta).find("$.params.beta") != std::string::npos);

  const std::string bad_constraint = temp_json("bad_constraint", R"({
    "version": 1, "kind": "tree", "tau": 0.5,
    "space": {"lower": [0, 0], "upper": [1, 1]},
    "params": {"leaves": [
      {"id": 0, "weight": 1.0, "constraints": [{"a": [0.0, 1.0], "b": 0.5}]},
      {"id": 1, "weight": 0.0, "constraints": [{"a": "oops", "b": -0.5, "strict": true}]}
    ]}
  })");
  CHECK(load_error(bad_constraint).find("$.params.leaves[1].constraints[0].a") !=
        std::string::npos);

  const std::string bad_version = temp_json("bad_version", R"({
    "version": 2, "kind": "linear", "tau": 0.0,
    "space": {"lower": [0], "upper": [1]},
    "params": {"beta": [1.0], "beta0": 0.0}
  })");
  CHECK(load_error(bad_version).find("$.version") != std::string::npos);

  const std::string bad_kind = temp_json("bad_kind", R"({
    "version": 1, "kind": "svm", "tau": 0.0,
    "space": {"lower": [0], "upper": [1]},
    "params": {}
  })");
  CHECK(load_error(bad_kind).find("$.kind") != std::string::npos);
}

TEST_CASE("io: structural validation runs on load") {
  // Leaves that leave (0.3, 0.7] x anything uncovered must be rejected.
  const std::string hole = temp_json("hole", R"({
    "version": 1, "kind": "tree", "tau": 0.5,
    "space": {"lower": [0, 0], "upper": [1, 1]},
    "params": {"leaves": [
      {"id": 0, "weight": 1.0, "constraints": [{"a": [1.0, 0.0], "b": 0.3}]},
      {"id": 1, "weight": 0.0, "constraints": [{"a": [-1.0, 0.0], "b": -0.7, "strict": true}]}
    ]}
  })");
  CHECK_THROWS_AS((void)load_model(hole), ModelError);
  CHECK_THROWS_AS((void)load_model("/tmp/rce_io_definitely_absent.json"), ModelError);
}

TEST_CASE("io: immutable mask round trips") {
  TrainedModel m = load_fixture("linear_gate.json");
  m.space.immutable = {1, 0};
  const std::string tmp = "/tmp/rce_io_mask.json";
  save_model(m, tmp);
  const TrainedModel b = load_model(tmp);
  REQUIRE(b.space.immutable.size() == 2);
  CHECK(b.space.immutable[0] == 1);
  CHECK(b.space.immutable[1] == 0);
  std::remove(tmp.c_str());
}
