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
#ifndef RCE_TYPES_HPP
#define RCE_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rce {

using Vector = std::vector<double>;

/** Norm defining the perturbation ball. */
enum class SetNorm : int { linf, l2 };

/** Norm defining the counterfactual distance objective. */
enum class DistNorm : int { l1, linf };

/** Caller passed structurally invalid data (dimension mismatch, bad range). */
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/** Loaded or constructed model violates its own integrity rules. */
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** Embedded solver failed in a way that is not a normal status. */
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dot(const Vector& a, const Vector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm_l1(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

inline double norm_l2(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline double norm_linf(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc = std::max(acc, std::abs(x));
  return acc;
}

inline double set_norm(SetNorm n, const Vector& v) {
  return n == SetNorm::linf ? norm_linf(v) : norm_l2(v);
}

/** Dual norm of the perturbation-ball norm, used by closed-form tightenings. */
inline double set_dual_norm(SetNorm n, const Vector& v) {
  return n == SetNorm::linf ? norm_l1(v) : norm_l2(v);
}

}  // namespace rce

#endif  // RCE_TYPES_HPP
