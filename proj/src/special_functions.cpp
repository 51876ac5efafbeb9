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
#include "rce/special_functions.hpp"

#include <cmath>
#include <limits>

#include "rce/types.hpp"

namespace rce::stats {

namespace {

constexpr int kMaxIter = 10000;
constexpr double kEps = 1e-16;

/** gamma(a,x)/Gamma(a) by power series; requires x < a+1 for fast convergence. */
double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/** Q(a,x) by modified-Lentz continued fraction; requires x >= a+1. */
double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

/**
 * Safeguarded Newton root of f on a sign-changing bracket [lo, hi].
 * Falls back to bisection whenever the Newton step leaves the bracket.
 */
template <typename F, typename DF>
double bracketed_newton(F f, DF df, double lo, double hi, double x0) {
  double x = x0;
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    double slope = df(x);
    double next = (slope != 0.0) ? x - fx / slope : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(next))) return next;
    x = next;
  }
  return x;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p must lie in (0,1)");
  auto f = [p](double x) { return normal_cdf(x) - p; };
  return bracketed_newton(f, normal_pdf, -40.0, 40.0, 0.0);
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw InputError("regularized_gamma_p: a must be positive");
  if (x < 0.0) throw InputError("regularized_gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_cdf(double k, double x) {
  if (!(k > 0.0)) throw InputError("chi2_cdf: k must be positive");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * k, 0.5 * x);
}

double chi2_pdf(double k, double x) {
  if (!(k > 0.0)) throw InputError("chi2_pdf: k must be positive");
  if (x <= 0.0) return 0.0;
  double half_k = 0.5 * k;
  return std::exp((half_k - 1.0) * std::log(x) - 0.5 * x - std::lgamma(half_k) -
                  half_k * std::log(2.0));
}

double chi2_quantile(double k, double alpha) {
  if (!(k > 0.0)) throw InputError("chi2_quantile: k must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("chi2_quantile: alpha must lie in (0,1)");
  double hi = k + 10.0 * std::sqrt(k) + 10.0;
  while (chi2_cdf(k, hi) < alpha) hi *= 2.0;
  auto f = [k, alpha](double x) { return chi2_cdf(k, x) - alpha; };
  auto df = [k](double x) { return chi2_pdf(k, x); };
  return bracketed_newton(f, df, 0.0, hi, std::min(k, 0.5 * hi));
}

}  // namespace rce::stats
