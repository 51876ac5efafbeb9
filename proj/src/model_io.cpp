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
#include "rce/model_io.hpp"

#include <fstream>
#include <string>

namespace rce {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ModelError(path + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

Vector vector_of(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vector out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

FeatureSpace space_of(const json& j, const std::string& path) {
  FeatureSpace s;
  s.lower = vector_of(field(j, "lower", path), path + ".lower");
  s.upper = vector_of(field(j, "upper", path), path + ".upper");
  if (s.lower.size() != s.upper.size()) fail(path, "lower and upper differ in length");
  if (j.contains("dim")) {
    const json& d = j["dim"];
    if (!d.is_number_integer() || d.get<long long>() != static_cast<long long>(s.lower.size()))
      fail(path + ".dim", "disagrees with the bound vectors");
  }
  s.immutable.assign(s.lower.size(), 0);
  if (j.contains("immutable_mask")) {
    const json& im = j["immutable_mask"];
    if (!im.is_array() || im.size() != s.lower.size())
      fail(path + ".immutable_mask", "expected a boolean array of length " +
                                         std::to_string(s.lower.size()));
    for (std::size_t i = 0; i < im.size(); ++i) {
      const std::string p = path + ".immutable_mask[" + std::to_string(i) + "]";
      if (im[i].is_boolean()) {
        s.immutable[i] = im[i].get<bool>() ? 1 : 0;
      } else if (im[i].is_number_integer()) {
        long long v = im[i].get<long long>();
        if (v != 0 && v != 1) fail(p, "expected a boolean or 0/1");
        s.immutable[i] = static_cast<char>(v);
      } else {
        fail(p, "expected a boolean or 0/1");
      }
    }
  }
  return s;
}

Leaf leaf_of(const json& j, const std::string& path) {
  Leaf leaf;
  const json& id = field(j, "id", path);
  if (!id.is_number_integer()) fail(path + ".id", "expected an integer");
  leaf.id = id.get<int>();
  leaf.weight = number(field(j, "weight", path), path + ".weight");
  const json& cons = field(j, "constraints", path);
  if (!cons.is_array()) fail(path + ".constraints", "expected an array");
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const std::string p = path + ".constraints[" + std::to_string(i) + "]";
    Halfspace hs;
    hs.a = vector_of(field(cons[i], "a", p), p + ".a");
    hs.b = number(field(cons[i], "b", p), p + ".b");
    if (cons[i].contains("strict")) {
      if (!cons[i]["strict"].is_boolean()) fail(p + ".strict", "expected a boolean");
      hs.strict = cons[i]["strict"].get<bool>();
    }
    leaf.constraints.push_back(std::move(hs));
  }
  return leaf;
}

DecisionTree tree_of(const json& j, const std::string& path) {
  DecisionTree t;
  const json& leaves = field(j, "leaves", path);
  if (!leaves.is_array()) fail(path + ".leaves", "expected an array");
  for (std::size_t i = 0; i < leaves.size(); ++i)
    t.leaves.push_back(leaf_of(leaves[i], path + ".leaves[" + std::to_string(i) + "]"));
  return t;
}

json leaf_to_json(const Leaf& leaf) {
  json cons = json::array();
  for (const Halfspace& hs : leaf.constraints) {
    json c{{"a", hs.a}, {"b", hs.b}};
    if (hs.strict) c["strict"] = true;
    cons.push_back(std::move(c));
  }
  return json{{"id", leaf.id}, {"weight", leaf.weight}, {"constraints", std::move(cons)}};
}

json tree_to_json(const DecisionTree& t) {
  json leaves = json::array();
  for (const Leaf& leaf : t.leaves) leaves.push_back(leaf_to_json(leaf));
  return json{{"leaves", std::move(leaves)}};
}

}  // namespace

TrainedModel model_from_json(const json& j) {
  const std::string root = "$";
  const json& version = field(j, "version", root);
  if (!version.is_number_integer() || version.get<long long>() != 1)
    fail(root + ".version", "unsupported version (expected 1)");

  TrainedModel m;
  m.tau = number(field(j, "tau", root), root + ".tau");
  m.space = space_of(field(j, "space", root), root + ".space");

  const json& kindj = field(j, "kind", root);
  if (!kindj.is_string()) fail(root + ".kind", "expected a string");
  const std::string kind = kindj.get<std::string>();
  const json& params = field(j, "params", root);
  const std::string ppath = root + ".params";

  if (kind == "linear") {
    LinearModel lm;
    lm.beta = vector_of(field(params, "beta", ppath), ppath + ".beta");
    lm.beta0 = number(field(params, "beta0", ppath), ppath + ".beta0");
    m.function = std::move(lm);
  } else if (kind == "tree") {
    m.function = tree_of(params, ppath);
  } else if (kind == "ensemble") {
    TreeEnsemble ens;
    const json& vote = field(params, "vote_mode", ppath);
    if (!vote.is_string() ||
        (vote.get<std::string>() != "average" && vote.get<std::string>() != "majority"))
      fail(ppath + ".vote_mode", "expected \"average\" or \"majority\"");
    ens.vote = vote.get<std::string>() == "average" ? VoteMode::average : VoteMode::majority;
    const json& trees = field(params, "trees", ppath);
    if (!trees.is_array() || trees.empty()) fail(ppath + ".trees", "expected a non-empty array");
    for (std::size_t k = 0; k < trees.size(); ++k)
      ens.trees.push_back(tree_of(trees[k], ppath + ".trees[" + std::to_string(k) + "]"));
    m.function = std::move(ens);
  } else if (kind == "relu") {
    ReluNetwork net;
    const json& layers = field(params, "layers", ppath);
    if (!layers.is_array() || layers.empty())
      fail(ppath + ".layers", "expected a non-empty array");
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const std::string p = ppath + ".layers[" + std::to_string(li) + "]";
      ReluNetwork::Layer layer;
      const json& rows = field(layers[li], "weights", p);
      if (!rows.is_array() || rows.empty()) fail(p + ".weights", "expected a non-empty array");
      for (std::size_t r = 0; r < rows.size(); ++r)
        layer.weights.push_back(vector_of(rows[r], p + ".weights[" + std::to_string(r) + "]"));
      layer.bias = vector_of(field(layers[li], "bias", p), p + ".bias");
      net.layers.push_back(std::move(layer));
    }
    m.function = std::move(net);
  } else {
    fail(root + ".kind", "unknown model kind \"" + kind + "\"");
  }

  try {
    m.validate();
  } catch (const ModelError& e) {
    fail(root, e.what());
  }
  return m;
}

json model_to_json(const TrainedModel& model) {
  json space{{"dim", model.space.dim()},
             {"lower", model.space.lower},
             {"upper", model.space.upper}};
  bool any_immutable = false;
  json mask = json::array();
  for (char f : model.space.immutable) {
    mask.push_back(f != 0);
    any_immutable = any_immutable || f;
  }
  if (any_immutable) space["immutable_mask"] = std::move(mask);

  json params;
  std::string kind;
  switch (model.kind()) {
    case ModelKind::linear:
      kind = "linear";
      params = json{{"beta", model.linear().beta}, {"beta0", model.linear().beta0}};
      break;
    case ModelKind::tree:
      kind = "tree";
      params = tree_to_json(model.tree());
      break;
    case ModelKind::ensemble: {
      kind = "ensemble";
      json trees = json::array();
      for (const DecisionTree& t : model.ensemble().trees) trees.push_back(tree_to_json(t));
      params = json{
          {"vote_mode", model.ensemble().vote == VoteMode::average ? "average" : "majority"},
          {"trees", std::move(trees)}};
      break;
    }
    case ModelKind::relu: {
      kind = "relu";
      json layers = json::array();
      for (const ReluNetwork::Layer& layer : model.network().layers)
        layers.push_back(json{{"weights", layer.weights}, {"bias", layer.bias}});
      params = json{{"layers", std::move(layers)}};
      break;
    }
  }

  return json{{"version", 1},
              {"kind", kind},
              {"tau", model.tau},
              {"space", std::move(space)},
              {"params", std::move(params)}};
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError(path + ": cannot open for reading");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ModelError(path + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError(path + ": cannot open for writing");
  out << model_to_json(model).dump(2) << "\n";
  if (!out) throw ModelError(path + ": write failed");
}

}  // namespace rce
