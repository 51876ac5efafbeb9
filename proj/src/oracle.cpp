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
#include "rce/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "rce/simplex.hpp"
#include "rce/types.hpp"

namespace rce::oracle {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// enumerate_milp
// ---------------------------------------------------------------------------

/** Worst conic residual ||x_I||_2 - (rho + x_r) at x; -1 when all clean. */
double worst_conic(const milp::MilpModel& model, const std::vector<double>& x, int* which) {
  double worst = 0.0;
  *which = -1;
  for (std::size_t c = 0; c < model.conics().size(); ++c) {
    const milp::ConicDef& k = model.conics()[c];
    double nrm = 0.0;
    for (int v : k.members) nrm += x[static_cast<std::size_t>(v)] * x[static_cast<std::size_t>(v)];
    nrm = std::sqrt(nrm);
    const double radius = k.rho + (k.radius_var >= 0 ? x[static_cast<std::size_t>(k.radius_var)] : 0.0);
    if (nrm - radius > worst) {
      worst = nrm - radius;
      *which = static_cast<int>(c);
    }
  }
  return worst;
}

}  // namespace

milp::SolveOutcome enumerate_milp(const milp::MilpModel& model, const milp::SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& vars = model.variables();
  std::vector<int> binaries;
  for (std::size_t j = 0; j < vars.size(); ++j)
    if (vars[j].is_binary) binaries.push_back(static_cast<int>(j));
  if (binaries.size() > 12)
    throw InputError("enumerate_milp: refusing instances with more than 12 binaries");

  milp::LpInstance base;
  base.num_vars = static_cast<int>(vars.size());
  base.lb.resize(vars.size());
  base.ub.resize(vars.size());
  base.cost.assign(vars.size(), 0.0);
  for (std::size_t j = 0; j < vars.size(); ++j) {
    base.lb[j] = vars[j].lb;
    base.ub[j] = vars[j].ub;
  }
  const milp::Objective& obj = model.objective();
  const double obj_sign = (obj.sense == milp::ObjSense::maximize) ? -1.0 : 1.0;
  for (const milp::Term& t : obj.terms)
    base.cost[static_cast<std::size_t>(t.var)] += obj_sign * t.coef;
  base.rows.reserve(model.constraints().size());
  for (const milp::ConstraintDef& c : model.constraints()) base.rows.push_back({c.row, c.sense, c.rhs});

  milp::SolveOutcome out;
  double best = kInf;
  long lp_count = 0;
  const std::uint64_t total = std::uint64_t{1} << binaries.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (elapsed > cfg.time_limit_s) {
      out.status = milp::SolveStatus::time_limit;
      break;
    }
    milp::LpInstance inst = base;
    bool assignable = true;
    for (std::size_t j = 0; j < binaries.size(); ++j) {
      const double bit = static_cast<double>((mask >> j) & 1u);
      const std::size_t v = static_cast<std::size_t>(binaries[j]);
      // Respect externally fixed binaries: an out-of-bounds bit is not a node.
      if (bit < inst.lb[v] - cfg.int_tol || bit > inst.ub[v] + cfg.int_tol) {
        assignable = false;
        break;
      }
      inst.lb[v] = bit;
      inst.ub[v] = bit;
    }
    if (!assignable) continue;

    milp::LpResult lp;
    int cuts = 0;
    for (;;) {
      lp = milp::solve_dense_lp(inst, cfg.feas_tol);
      ++lp_count;
      if (lp.status != milp::SolveStatus::optimal) break;
      int which = -1;
      const double viol = worst_conic(model, lp.x, &which);
      if (viol <= cfg.conic_tol || which < 0) break;
      if (cuts >= cfg.max_cuts_per_node) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "conic residual violation %.3e after cut cap", viol);
        out.warnings.push_back(buf);
        break;
      }
      const milp::ConicDef& k = model.conics()[static_cast<std::size_t>(which)];
      double nrm = 0.0;
      for (int v : k.members)
        nrm += lp.x[static_cast<std::size_t>(v)] * lp.x[static_cast<std::size_t>(v)];
      nrm = std::sqrt(nrm);
      if (nrm < 1e-12) {
        out.warnings.push_back("conic separation degenerate at the origin");
        break;
      }
      milp::LpInstance::Row cut;
      for (int v : k.members) cut.terms.push_back({v, lp.x[static_cast<std::size_t>(v)] / nrm});
      if (k.radius_var >= 0) cut.terms.push_back({k.radius_var, -1.0});
      cut.sense = milp::Sense::le;
      cut.rhs = k.rho;
      inst.rows.push_back(std::move(cut));
      ++cuts;
    }

    if (lp.status == milp::SolveStatus::unbounded) {
      out.status = milp::SolveStatus::unbounded;
      out.assignment.clear();
      out.objective = std::numeric_limits<double>::quiet_NaN();
      out.node_count = lp_count;
      out.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return out;
    }
    if (lp.status == milp::SolveStatus::optimal && lp.objective < best) {
      best = lp.objective;
      out.assignment = lp.x;
      out.status = milp::SolveStatus::optimal;
    }
  }
  out.node_count = lp_count;
  if (out.has_assignment())
    out.objective = obj_sign * best + obj.constant;
  else if (out.status != milp::SolveStatus::time_limit)
    out.status = milp::SolveStatus::infeasible;
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// sample_audit
// ---------------------------------------------------------------------------

namespace {

/** 53-bit mantissa draw in [0, 1); identical stream on every platform. */
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double gaussian_draw(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_draw(rng);  // (0, 1], keeps the log finite
  const double u2 = unit_draw(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace

AuditReport sample_audit(const TrainedModel& model, const Vector& x, const UncertaintySet& set,
                         int num_samples, std::uint64_t seed) {
  model.validate();
  const std::size_t n = model.space.dim();
  if (x.size() != n) throw InputError("sample_audit: point dimension does not match the model");
  if (num_samples < 1) throw InputError("sample_audit: num_samples must be positive");
  if (!(std::isfinite(set.rho) && set.rho >= 0.0))
    throw InputError("sample_audit: rho must be a nonnegative real");

  std::vector<std::size_t> mutable_idx;
  for (std::size_t i = 0; i < n; ++i)
    if (!model.space.immutable[i]) mutable_idx.push_back(i);
  const std::size_t m = mutable_idx.size();

  std::mt19937_64 rng(seed);
  AuditReport report;
  report.samples = num_samples;
  report.min_score = kInf;
  Vector s(n, 0.0);
  Vector y(n, 0.0);
  for (int draw = 0; draw < num_samples; ++draw) {
    const bool boundary = (draw % 2 == 1);
    std::fill(s.begin(), s.end(), 0.0);
    if (m > 0 && set.rho > 0.0) {
      if (set.norm == SetNorm::linf) {
        for (std::size_t i : mutable_idx) s[i] = set.rho * (2.0 * unit_draw(rng) - 1.0);
        if (boundary) {
          const std::size_t pick = mutable_idx[rng() % m];
          s[pick] = (unit_draw(rng) < 0.5) ? -set.rho : set.rho;
        }
      } else {
        double nrm = 0.0;
        do {
          nrm = 0.0;
          for (std::size_t i : mutable_idx) {
            s[i] = gaussian_draw(rng);
            nrm += s[i] * s[i];
          }
          nrm = std::sqrt(nrm);
        } while (nrm < 1e-12);
        const double radius =
            boundary ? set.rho
                     : set.rho * std::pow(unit_draw(rng), 1.0 / static_cast<double>(m));
        for (std::size_t i : mutable_idx) s[i] *= radius / nrm;
      }
    }
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + s[i];
    const double score = raw_score(model, y);
    if (score < report.min_score) {
      report.min_score = score;
      report.worst_scenario = s;
    }
  }
  report.all_valid = report.min_score >= model.tau;
  return report;
}

// ---------------------------------------------------------------------------
// grid_ce
// ---------------------------------------------------------------------------

namespace {

double dual_norm_mutable(SetNorm norm, const Vector& a, const std::vector<char>& immutable) {
  Vector masked;
  masked.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!immutable[i]) masked.push_back(a[i]);
  return set_dual_norm(norm, masked);
}

/** Axis-interval view of a leaf; usable only when every row is single-axis. */
struct LeafBox {
  Vector lo, hi;
  bool empty = false;
};

bool leaf_as_box(const Leaf& leaf, std::size_t n, LeafBox* out) {
  out->lo.assign(n, -kInf);
  out->hi.assign(n, kInf);
  out->empty = false;
  for (const Halfspace& c : leaf.constraints) {
    int axis = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (c.a[i] == 0.0) continue;
      if (axis >= 0) return false;  // two active coefficients: oblique row
      axis = static_cast<int>(i);
    }
    if (axis < 0) {
      if (c.b < 0.0 || (c.strict && c.b <= 0.0)) out->empty = true;
      continue;
    }
    const double coef = c.a[static_cast<std::size_t>(axis)];
    const double bound = c.b / coef;
    if (coef > 0.0)
      out->hi[static_cast<std::size_t>(axis)] = std::min(out->hi[static_cast<std::size_t>(axis)], bound);
    else
      out->lo[static_cast<std::size_t>(axis)] = std::max(out->lo[static_cast<std::size_t>(axis)], bound);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (out->lo[i] > out->hi[i]) out->empty = true;
  return true;
}

/**
 * Distance from y to the closure of a leaf box, measured in the set norm
 * over mutable axes only; +inf when an immutable axis already separates.
 */
double box_reach(const LeafBox& box, const Vector& y, SetNorm norm,
                 const std::vector<char>& immutable) {
  if (box.empty) return kInf;
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double gap = std::max({0.0, box.lo[i] - y[i], y[i] - box.hi[i]});
    if (immutable[i]) {
      if (gap > 0.0) return kInf;
      continue;
    }
    if (norm == SetNorm::linf)
      acc = std::max(acc, gap);
    else
      acc += gap * gap;
  }
  return norm == SetNorm::linf ? acc : std::sqrt(acc);
}

std::vector<double> axis_values(double lo, double hi, double h) {
  const int steps = static_cast<int>(std::floor((hi - lo) / h + 1e-9));
  std::vector<double> vals(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) vals[static_cast<std::size_t>(j)] = lo + h * j;
  return vals;
}

/** Row-major odometer over per-axis sizes; returns false after the last cell. */
bool advance(std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) {
  for (std::size_t a = dims.size(); a-- > 0;) {
    if (++idx[a] < dims[a]) return true;
    idx[a] = 0;
  }
  return false;
}

/**
 * One-dimensional squared distance transform (lower envelope of parabolas),
 * unit spacing. Cells without a site carry +inf and are skipped. In-place.
 */
void squared_dt_line(std::vector<double>& f) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(f.size(), 0);
  std::vector<double> z(f.size() + 1, 0.0);
  std::vector<double> d(f.size(), kInf);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const std::size_t uq = static_cast<std::size_t>(q);
    if (f[uq] == kInf) continue;
    double s = 0.0;
    while (k >= 0) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[uq] + static_cast<double>(q) * q) -
           (f[static_cast<std::size_t>(p)] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s > z[static_cast<std::size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = (k == 0) ? -kInf : s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) return;  // no sites: the whole line stays +inf
  std::size_t j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < static_cast<double>(q)) ++j;
    const int p = v[j];
    d[static_cast<std::size_t>(q)] =
        static_cast<double>(q - p) * (q - p) + f[static_cast<std::size_t>(p)];
  }
  f = d;
}

/** Applies fn to every axis-a line of a row-major array of shape dims. */
template <typename Fn>
void for_each_line(std::vector<double>& data, const std::vector<std::size_t>& dims, std::size_t axis,
                   Fn fn) {
  std::vector<std::size_t> stride(dims.size(), 1);
  for (std::size_t a = dims.size(); a-- > 1;) stride[a - 1] = stride[a] * dims[a];
  std::vector<std::size_t> outer_dims;
  std::vector<std::size_t> outer_strides;
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (a == axis) continue;
    outer_dims.push_back(dims[a]);
    outer_strides.push_back(stride[a]);
  }
  std::vector<std::size_t> idx(outer_dims.size(), 0);
  std::vector<double> line(dims[axis]);
  for (;;) {
    std::size_t base = 0;
    for (std::size_t a = 0; a < outer_dims.size(); ++a) base += idx[a] * outer_strides[a];
    for (std::size_t i = 0; i < dims[axis]; ++i) line[i] = data[base + i * stride[axis]];
    fn(line);
    for (std::size_t i = 0; i < dims[axis]; ++i) data[base + i * stride[axis]] = line[i];
    if (outer_dims.empty() || !advance(idx, outer_dims)) break;
  }
}

/** Window erosion along a line: out[i] = min over |j-i| <= r of in[j]. */
void erode_line(std::vector<double>& line, std::size_t r) {
  if (r == 0) return;
  const std::size_t n = line.size();
  std::vector<double> prefix(n + 1, 0.0);  // running count of zeros
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (line[i] == 0.0 ? 1.0 : 0.0);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= r ? i - r : 0;
    const std::size_t b = std::min(n - 1, i + r);
    out[i] = (prefix[b + 1] - prefix[a] > 0.0) ? 0.0 : 1.0;
  }
  line = out;
}

}  // namespace

GridCeResult grid_ce(const TrainedModel& model, const Vector& factual, const UncertaintySet& set,
                     const DistanceSpec& dist, double resolution) {
  model.validate();
  const std::size_t n = model.space.dim();
  if (n > 3) throw InputError("grid_ce: the exhaustive reference supports at most 3 dimensions");
  if (factual.size() != n) throw InputError("grid_ce: factual dimension does not match the model");
  if (!(std::isfinite(resolution) && resolution > 0.0))
    throw InputError("grid_ce: resolution must be a positive real");
  if (!(std::isfinite(set.rho) && set.rho >= 0.0))
    throw InputError("grid_ce: rho must be a nonnegative real");
  if (!dist.weights.empty() && dist.weights.size() != n)
    throw InputError("grid_ce: distance weight count does not match the model dimension");
  const auto weight = [&](std::size_t i) { return dist.weights.empty() ? 1.0 : dist.weights[i]; };
  const auto candidate_distance = [&](const Vector& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double term = weight(i) * std::abs(y[i] - factual[i]);
      acc = dist.norm == DistNorm::linf ? std::max(acc, term) : acc + term;
    }
    return acc;
  };

  const double h = resolution;
  std::vector<std::vector<double>> axes(n);
  for (std::size_t i = 0; i < n; ++i) {
    axes[i] = model.space.immutable[i] ? std::vector<double>{factual[i]}
                                       : axis_values(model.space.lower[i], model.space.upper[i], h);
  }

  // Robustness test per candidate, specialized by model family.
  enum class Mode { linear, boxes, transform };
  Mode mode = Mode::transform;
  double linear_threshold = 0.0;
  std::vector<LeafBox> negative_boxes;
  if (model.kind() == ModelKind::linear) {
    mode = Mode::linear;
    const LinearModel& lin = model.linear();
    linear_threshold =
        model.tau - lin.beta0 + set.rho * dual_norm_mutable(set.norm, lin.beta, model.space.immutable);
  } else if (model.kind() == ModelKind::tree) {
    mode = Mode::boxes;
    for (const Leaf& leaf : model.tree().leaves) {
      if (leaf.weight >= model.tau) continue;
      LeafBox box;
      if (!leaf_as_box(leaf, n, &box)) {
        mode = Mode::transform;  // oblique split: fall back to the grid transform
        negative_boxes.clear();
        break;
      }
      negative_boxes.push_back(std::move(box));
    }
  }

  // Grid transform state: class flags over the box extended by the ball radius.
  std::vector<std::size_t> ext_dims(n, 1);
  std::vector<std::size_t> ext_offset(n, 0);
  std::vector<double> safe;  // 1 = whole ball positive (up to one cell of slack)
  if (mode == Mode::transform) {
    const std::size_t reach = static_cast<std::size_t>(std::ceil(set.rho / h - 1e-9));
    std::vector<std::vector<double>> ext_axes(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (model.space.immutable[i]) {
        ext_axes[i] = {factual[i]};
        continue;
      }
      ext_offset[i] = reach;
      ext_axes[i] = axis_values(model.space.lower[i] - static_cast<double>(reach) * h,
                                model.space.upper[i], h);
      for (std::size_t j = 0; j < reach; ++j)
        ext_axes[i].push_back(model.space.upper[i] + static_cast<double>(j + 1) * h);
    }
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
      ext_dims[i] = ext_axes[i].size();
      total *= ext_dims[i];
    }
    std::vector<double> positive(total);
    std::vector<std::size_t> idx(n, 0);
    Vector y(n);
    std::size_t flat = 0;
    do {
      for (std::size_t i = 0; i < n; ++i) y[i] = ext_axes[i][idx[i]];
      positive[flat++] = (raw_class(model, y) == 1) ? 1.0 : 0.0;
    } while (advance(idx, ext_dims));

    if (set.norm == SetNorm::linf) {
      safe = positive;
      const std::size_t window = static_cast<std::size_t>(std::floor(set.rho / h + 1e-9));
      for (std::size_t a = 0; a < n; ++a) {
        if (model.space.immutable[a]) continue;
        for_each_line(safe, ext_dims, a, [&](std::vector<double>& line) { erode_line(line, window); });
      }
    } else {
      std::vector<double> d2(total);
      for (std::size_t c = 0; c < total; ++c) d2[c] = positive[c] == 0.0 ? 0.0 : kInf;
      for (std::size_t a = 0; a < n; ++a)
        for_each_line(d2, ext_dims, a, [&](std::vector<double>& line) { squared_dt_line(line); });
      safe.assign(total, 0.0);
      const double needed = set.rho - h;  // one cell of slack for off-grid boundaries
      for (std::size_t c = 0; c < total; ++c) {
        const double cell_dist = d2[c] == kInf ? kInf : std::sqrt(d2[c]) * h;
        safe[c] = (positive[c] == 1.0 && cell_dist >= needed) ? 1.0 : 0.0;
      }
    }
  }
  std::vector<std::size_t> ext_stride(n, 1);
  for (std::size_t a = n; a-- > 1;) ext_stride[a - 1] = ext_stride[a] * ext_dims[a];

  GridCeResult best;
  double best_dist = kInf;
  std::vector<std::size_t> dims(n);
  for (std::size_t i = 0; i < n; ++i) dims[i] = axes[i].size();
  std::vector<std::size_t> idx(n, 0);
  Vector y(n);
  do {
    for (std::size_t i = 0; i < n; ++i) y[i] = axes[i][idx[i]];
    bool robust = false;
    switch (mode) {
      case Mode::linear:
        robust = dot(model.linear().beta, y) >= linear_threshold;
        break;
      case Mode::boxes: {
        robust = raw_class(model, y) == 1;
        for (const LeafBox& box : negative_boxes) {
          if (!robust) break;
          robust = box_reach(box, y, set.norm, model.space.immutable) >= set.rho;
        }
        break;
      }
      case Mode::transform: {
        std::size_t flat = 0;
        for (std::size_t i = 0; i < n; ++i) flat += (idx[i] + ext_offset[i]) * ext_stride[i];
        robust = safe[flat] == 1.0;
        break;
      }
    }
    if (robust) {
      const double d = candidate_distance(y);
      if (d < best_dist) {
        best_dist = d;
        best.found = true;
        best.point = y;
        best.distance = d;
      }
    }
  } while (advance(idx, dims));
  return best;
}

}  // namespace rce::oracle
