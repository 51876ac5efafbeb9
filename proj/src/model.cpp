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
#include "rce/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <string>

namespace rce {

namespace {

bool finite(double v) { return std::isfinite(v); }

void check_dim(const TrainedModel& model, const Vector& x, const char* where) {
  if (x.size() != model.space.dim())
    throw InputError(std::string(where) + ": point has dimension " + std::to_string(x.size()) +
                     ", model expects " + std::to_string(model.space.dim()));
}

double tree_score(const DecisionTree& tree, const Vector& x) {
  return locate_leaf(tree, x).weight;
}

double ensemble_score(const TreeEnsemble& ens, const Vector& x) {
  double acc = 0.0;
  for (const DecisionTree& t : ens.trees) acc += tree_score(t, x);
  return acc / static_cast<double>(ens.trees.size());
}

double network_score(const ReluNetwork& net, const Vector& x) {
  Vector cur = x;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const ReluNetwork::Layer& layer = net.layers[li];
    Vector next(layer.weights.size());
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
      next[i] = dot(layer.weights[i], cur) + layer.bias[i];
    if (li + 1 < net.layers.size())
      for (double& v : next) v = std::max(v, 0.0);
    cur = std::move(next);
  }
  return cur[0];
}

/**
 * Largest singular value via alternating power iteration on A^T A.
 * Seeded deterministically; converges to relative tolerance 1e-9.
 */
double spectral_norm(const std::vector<Vector>& rows) {
  const std::size_t m = rows.size();
  const std::size_t n = rows[0].size();
  std::mt19937_64 gen(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector v(n);
  for (double& c : v) c = unif(gen);
  double nv = norm_l2(v);
  if (nv == 0.0) v[0] = 1.0, nv = 1.0;
  for (double& c : v) c /= nv;

  double sigma = 0.0;
  Vector u(m), w(n);
  for (int iter = 0; iter < 10000; ++iter) {
    for (std::size_t i = 0; i < m; ++i) u[i] = dot(rows[i], v);
    double sigma_next = norm_l2(u);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += rows[i][j] * u[i];
      w[j] = acc;
    }
    double nw = norm_l2(w);
    if (nw == 0.0) return sigma_next;  // landed in the null space: matrix is zero there
    for (std::size_t j = 0; j < n; ++j) v[j] = w[j] / nw;
    if (std::abs(sigma_next - sigma) <= 1e-9 * std::max(1.0, sigma_next)) return sigma_next;
    sigma = sigma_next;
  }
  return sigma;
}

void validate_tree(const DecisionTree& tree, const FeatureSpace& space,
                   const std::string& label) {
  const std::size_t dim = space.dim();
  if (tree.leaves.empty()) throw ModelError(label + ": tree has no leaves");
  std::set<int> ids;
  for (const Leaf& leaf : tree.leaves) {
    if (!ids.insert(leaf.id).second)
      throw ModelError(label + ": duplicate leaf id " + std::to_string(leaf.id));
    if (!finite(leaf.weight) || leaf.weight < 0.0 || leaf.weight > 1.0)
      throw ModelError(label + ": leaf " + std::to_string(leaf.id) +
                       " weight must lie in [0,1]");
    if (tree.leaves.size() > 1 && leaf.constraints.empty())
      throw ModelError(label + ": leaf " + std::to_string(leaf.id) +
                       " of a multi-leaf tree has no constraints");
    for (const Halfspace& hs : leaf.constraints) {
      if (hs.a.size() != dim)
        throw ModelError(label + ": leaf " + std::to_string(leaf.id) +
                         " has a split of dimension " + std::to_string(hs.a.size()));
      if (!finite(hs.b)) throw ModelError(label + ": non-finite split threshold");
      bool all_zero = true;
      for (double c : hs.a) {
        if (!finite(c)) throw ModelError(label + ": non-finite split coefficient");
        all_zero = all_zero && c == 0.0;
      }
      if (all_zero) throw ModelError(label + ": zero split vector");
    }
  }

  // Leaf regions must partition the feature box. Sampling cannot prove the
  // partition, but it refutes holes and overlaps of nonzero volume; draws
  // within tolerance of a split boundary are skipped as ambiguous.
  std::mt19937_64 gen(0x8f1bbcdcbfa53e0bULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int audited = 0;
  for (int draw = 0; draw < 1024 && audited < 512; ++draw) {
    Vector x(dim);
    for (std::size_t i = 0; i < dim; ++i)
      x[i] = space.lower[i] + (space.upper[i] - space.lower[i]) * unif(gen);
    bool ambiguous = false;
    int owners = 0;
    for (const Leaf& leaf : tree.leaves) {
      bool inside = true;
      for (const Halfspace& hs : leaf.constraints) {
        const double margin = dot(hs.a, x) - hs.b;
        if (std::abs(margin) <= 1e-9 * (1.0 + std::abs(hs.b))) {
          ambiguous = true;
          break;
        }
        if (margin > 0.0) {
          inside = false;
          break;
        }
      }
      if (ambiguous) break;
      if (inside) ++owners;
    }
    if (ambiguous) continue;
    ++audited;
    if (owners == 0)
      throw ModelError(label + ": sampled a point no leaf contains; leaves must partition " +
                       "the feature box");
    if (owners > 1)
      throw ModelError(label + ": sampled a point " + std::to_string(owners) +
                       " leaves contain; leaf regions overlap");
  }
}

}  // namespace

FeatureSpace FeatureSpace::unit_box(std::size_t n) {
  FeatureSpace s;
  s.lower.assign(n, 0.0);
  s.upper.assign(n, 1.0);
  s.immutable.assign(n, 0);
  return s;
}

void FeatureSpace::validate() const {
  if (lower.size() != upper.size() || lower.size() != immutable.size())
    throw ModelError("feature space: lower/upper/immutable sizes disagree");
  if (lower.empty()) throw ModelError("feature space: zero features");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!finite(lower[i]) || !finite(upper[i]))
      throw ModelError("feature space: bounds of feature " + std::to_string(i) +
                       " must be finite");
    if (lower[i] > upper[i])
      throw ModelError("feature space: feature " + std::to_string(i) + " has lower > upper");
  }
}

bool FeatureSpace::contains(const Vector& x, double tol) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  return true;
}

Vector FeatureSpace::clamp(const Vector& x) const {
  Vector out(x);
  for (std::size_t i = 0; i < dim() && i < out.size(); ++i)
    out[i] = std::min(std::max(out[i], lower[i]), upper[i]);
  return out;
}

void TrainedModel::validate() const {
  space.validate();
  if (!finite(tau)) throw ModelError("model: threshold must be finite");
  // Probability-like scores (linear/tree/ensemble) keep tau in [0,1];
  // network outputs are unnormalized, so their threshold is unrestricted.
  if (kind() != ModelKind::relu && (tau < 0.0 || tau > 1.0))
    throw ModelError("model: threshold must lie in [0,1] for this model kind");
  const std::size_t n = space.dim();
  switch (kind()) {
    case ModelKind::linear: {
      const LinearModel& lm = linear();
      if (lm.beta.size() != n)
        throw ModelError("linear model: coefficient vector has dimension " +
                         std::to_string(lm.beta.size()) + ", feature space has " +
                         std::to_string(n));
      for (double c : lm.beta)
        if (!finite(c)) throw ModelError("linear model: non-finite coefficient");
      if (!finite(lm.beta0)) throw ModelError("linear model: non-finite intercept");
      break;
    }
    case ModelKind::tree:
      validate_tree(tree(), space, "tree model");
      break;
    case ModelKind::ensemble: {
      const TreeEnsemble& ens = ensemble();
      if (ens.trees.empty()) throw ModelError("ensemble model: no trees");
      for (std::size_t k = 0; k < ens.trees.size(); ++k)
        validate_tree(ens.trees[k], space, "ensemble tree " + std::to_string(k));
      if (ens.vote == VoteMode::majority)
        for (const DecisionTree& t : ens.trees)
          for (const Leaf& leaf : t.leaves)
            if (leaf.weight != 0.0 && leaf.weight != 1.0)
              throw ModelError("ensemble model: majority vote requires 0/1 leaf weights");
      break;
    }
    case ModelKind::relu: {
      const ReluNetwork& net = network();
      if (net.layers.empty()) throw ModelError("network model: no layers");
      std::size_t in = n;
      for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const ReluNetwork::Layer& layer = net.layers[li];
        const std::string label = "network layer " + std::to_string(li);
        if (layer.weights.empty()) throw ModelError(label + ": no units");
        if (layer.bias.size() != layer.weights.size())
          throw ModelError(label + ": bias size disagrees with unit count");
        for (const Vector& row : layer.weights) {
          if (row.size() != in)
            throw ModelError(label + ": weight row has fan-in " + std::to_string(row.size()) +
                             ", expected " + std::to_string(in));
          for (double c : row)
            if (!finite(c)) throw ModelError(label + ": non-finite weight");
        }
        for (double c : layer.bias)
          if (!finite(c)) throw ModelError(label + ": non-finite bias");
        in = layer.weights.size();
      }
      if (in != 1) throw ModelError("network model: final layer must have one output");
      break;
    }
  }
}

double raw_score(const TrainedModel& model, const Vector& x) {
  check_dim(model, x, "raw_score");
  switch (model.kind()) {
    case ModelKind::linear: return model.linear().beta0 + dot(model.linear().beta, x);
    case ModelKind::tree: return tree_score(model.tree(), x);
    case ModelKind::ensemble: return ensemble_score(model.ensemble(), x);
    case ModelKind::relu: return network_score(model.network(), x);
  }
  throw ModelError("raw_score: unknown model kind");
}

int raw_class(const TrainedModel& model, const Vector& x) {
  return raw_score(model, x) >= model.tau ? +1 : -1;
}

double predict_score(const TrainedModel& model, const Vector& x) {
  check_dim(model, x, "predict_score");
  if (!model.space.contains(x)) {
    std::cerr << "rce: point lies outside the feature box; clamped for prediction\n";
    return raw_score(model, model.space.clamp(x));
  }
  return raw_score(model, x);
}

int predict_class(const TrainedModel& model, const Vector& x) {
  return predict_score(model, x) >= model.tau ? +1 : -1;
}

const Leaf& locate_leaf(const DecisionTree& tree, const Vector& x) {
  for (const Leaf& leaf : tree.leaves) {
    bool inside = true;
    for (const Halfspace& hs : leaf.constraints) {
      double lhs = dot(hs.a, x);
      if (hs.strict ? (lhs >= hs.b) : (lhs > hs.b)) {
        inside = false;
        break;
      }
    }
    if (inside) return leaf;
  }
  // Tolerant pass: boundary points synthesized by floating-point arithmetic
  // may miss every leaf by a few ulps. Strictness is waived here on purpose.
  for (const Leaf& leaf : tree.leaves) {
    bool inside = true;
    for (const Halfspace& hs : leaf.constraints) {
      if (dot(hs.a, x) > hs.b + 1e-9) {
        inside = false;
        break;
      }
    }
    if (inside) return leaf;
  }
  throw ModelError("locate_leaf: no leaf contains the point; leaves do not partition the space");
}

double surrogate_score(const DecisionTree& tree, double tau, const Vector& x) {
  const Leaf& leaf = locate_leaf(tree, x);
  if (leaf.weight >= tau) return tau;
  double slack = std::numeric_limits<double>::infinity();
  for (const Halfspace& hs : leaf.constraints) slack = std::min(slack, hs.b - dot(hs.a, x));
  return tau - slack;
}

double lipschitz_bound(const TrainedModel& model) {
  switch (model.kind()) {
    case ModelKind::linear: return norm_l2(model.linear().beta);
    case ModelKind::tree:
    case ModelKind::ensemble: {
      std::vector<const DecisionTree*> trees;
      if (model.kind() == ModelKind::tree) {
        trees.push_back(&model.tree());
      } else {
        for (const DecisionTree& t : model.ensemble().trees) trees.push_back(&t);
      }
      double best = 0.0;
      for (const DecisionTree* t : trees)
        for (const Leaf& leaf : t->leaves)
          for (const Halfspace& hs : leaf.constraints) best = std::max(best, norm_l2(hs.a));
      return best;
    }
    case ModelKind::relu: {
      double prod = 1.0;
      for (const ReluNetwork::Layer& layer : model.network().layers)
        prod *= spectral_norm(layer.weights);
      return prod;
    }
  }
  throw ModelError("lipschitz_bound: unknown model kind");
}

namespace {

/** 2*tau - w, clamped into [0,1] only when clamping does not cross tau. */
double negate_leaf_weight(double w, double tau) {
  double flipped = 2.0 * tau - w;
  double clamped = std::min(std::max(flipped, 0.0), 1.0);
  if ((clamped >= tau) == (flipped >= tau)) return clamped;
  return flipped;
}

}  // namespace

TrainedModel negate_model(const TrainedModel& model) {
  TrainedModel out = model;
  switch (model.kind()) {
    case ModelKind::linear: {
      LinearModel lm = model.linear();
      for (double& c : lm.beta) c = -c;
      lm.beta0 = 2.0 * model.tau - lm.beta0;
      out.function = lm;
      break;
    }
    case ModelKind::tree: {
      DecisionTree t = model.tree();
      for (Leaf& leaf : t.leaves) leaf.weight = negate_leaf_weight(leaf.weight, model.tau);
      out.function = t;
      break;
    }
    case ModelKind::ensemble: {
      TreeEnsemble ens = model.ensemble();
      for (DecisionTree& t : ens.trees)
        for (Leaf& leaf : t.leaves) leaf.weight = negate_leaf_weight(leaf.weight, model.tau);
      out.function = ens;
      break;
    }
    case ModelKind::relu: {
      ReluNetwork net = model.network();
      ReluNetwork::Layer& last = net.layers.back();
      for (Vector& row : last.weights)
        for (double& c : row) c = -c;
      for (double& c : last.bias) c = -c;
      out.function = net;
      out.tau = -model.tau;
      break;
    }
  }
  return out;
}

}  // namespace rce
