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
#ifndef RCE_MODEL_HPP
#define RCE_MODEL_HPP

#include <cstddef>
#include <variant>
#include <vector>

#include "rce/types.hpp"

namespace rce {

/** Axis-aligned feature box plus an immutability mask. */
struct FeatureSpace {
  Vector lower, upper;
  std::vector<char> immutable;  // per-feature: 1 = must stay at the factual value

  std::size_t dim() const { return lower.size(); }
  static FeatureSpace unit_box(std::size_t n);
  void validate() const;  // throws ModelError on inconsistency
  bool contains(const Vector& x, double tol = 0.0) const;
  Vector clamp(const Vector& x) const;
};

struct LinearModel {
  Vector beta;
  double beta0 = 0.0;
};

/** One halfspace a^T x <= b (or strictly < when strict). */
struct Halfspace {
  Vector a;
  double b = 0.0;
  bool strict = false;
};

/** A leaf region as the intersection of its path's halfspaces. */
struct Leaf {
  int id = 0;
  double weight = 0.0;  // leaf score
  std::vector<Halfspace> constraints;
};

/** Leaves must partition the input space; root-only trees have one leaf. */
struct DecisionTree {
  std::vector<Leaf> leaves;
};

enum class VoteMode : int { average, majority };

/** Uniformly averaged ensemble. majority mode expects 0/1 leaf weights. */
struct TreeEnsemble {
  std::vector<DecisionTree> trees;
  VoteMode vote = VoteMode::average;
};

/** Fully connected ReLU network; the final layer is affine with one output. */
struct ReluNetwork {
  struct Layer {
    std::vector<Vector> weights;  // weights[i] = incoming row of unit i
    Vector bias;
  };
  std::vector<Layer> layers;
};

enum class ModelKind : int { linear, tree, ensemble, relu };

/**
 * A classifier h with decision rule class(x) = +1 iff h(x) >= tau.
 * Immutable after construction; all operations on it are pure.
 */
struct TrainedModel {
  double tau = 0.5;
  FeatureSpace space;
  std::variant<LinearModel, DecisionTree, TreeEnsemble, ReluNetwork> function;

  ModelKind kind() const { return static_cast<ModelKind>(function.index()); }
  const LinearModel& linear() const { return std::get<LinearModel>(function); }
  const DecisionTree& tree() const { return std::get<DecisionTree>(function); }
  const TreeEnsemble& ensemble() const { return std::get<TreeEnsemble>(function); }
  const ReluNetwork& network() const { return std::get<ReluNetwork>(function); }

  void validate() const;  // structural integrity; throws ModelError
};

/**
 * Score at x without clamping. Perturbed points may legitimately leave the
 * feature box, so certification paths evaluate through this entry.
 */
double raw_score(const TrainedModel& model, const Vector& x);

/** Class at x without clamping: +1 iff raw_score >= tau (ties go positive). */
int raw_class(const TrainedModel& model, const Vector& x);

/** Score at x; points outside the feature box are clamped with a warning. */
double predict_score(const TrainedModel& model, const Vector& x);

/** Class at the (clamped) point: +1 iff predict_score >= tau. */
int predict_class(const TrainedModel& model, const Vector& x);

/**
 * The unique leaf containing x. Strict halfspaces own their open side;
 * exact containment is tried first, then a 1e-9-tolerant pass for points
 * created by floating-point boundary arithmetic. Throws ModelError when
 * no leaf matches (malformed tree).
 */
const Leaf& locate_leaf(const DecisionTree& tree, const Vector& x);

/**
 * Lipschitz surrogate score: tau on leaves with weight >= tau, and
 * tau - min_j (b_j - a_j^T x) over the leaf's halfspaces otherwise.
 * Continuous across leaf boundaries and never exceeds tau.
 */
double surrogate_score(const DecisionTree& tree, double tau, const Vector& x);

/**
 * Upper bound on the Lipschitz constant (w.r.t. the l2 norm):
 * linear |beta|; trees/ensembles max ||a||_2 over split halfspaces;
 * networks the product of layer spectral norms (power iteration,
 * fixed seed, relative tolerance 1e-9, 10^4 iteration cap).
 */
double lipschitz_bound(const TrainedModel& model);

/**
 * The same model with its classes swapped: scores map to 2*tau - score
 * (clamped to [0,1] for tree leaf weights), network outputs negate with
 * tau -> -tau. Points exactly on the boundary are positive before and
 * after; everything else flips.
 */
TrainedModel negate_model(const TrainedModel& model);

}  // namespace rce

#endif  // RCE_MODEL_HPP
