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
#ifndef RCE_SPECIAL_FUNCTIONS_HPP
#define RCE_SPECIAL_FUNCTIONS_HPP

namespace rce::stats {

/** Standard normal CDF. Accurate to ~1 ulp via erfc. */
double normal_cdf(double x);

/** Standard normal density. */
double normal_pdf(double x);

/**
 * Inverse standard normal CDF on p in (0,1).
 * Bracketed Newton iteration; absolute accuracy better than 1e-12
 * for p away from the extreme tails.
 */
double normal_quantile(double p);

/**
 * Regularized lower incomplete gamma P(a,x), a > 0, x >= 0.
 * Series expansion for x < a+1, continued fraction otherwise.
 */
double regularized_gamma_p(double a, double x);

/** Chi-square CDF with k degrees of freedom, F(x) = P(k/2, x/2). */
double chi2_cdf(double k, double x);

/** Chi-square density with k degrees of freedom. */
double chi2_pdf(double k, double x);

/**
 * Chi-square quantile: the x with chi2_cdf(k, x) = alpha, alpha in (0,1).
 * Bracketed Newton iteration, relative accuracy better than 1e-12.
 */
double chi2_quantile(double k, double alpha);

}  // namespace rce::stats

#endif  // RCE_SPECIAL_FUNCTIONS_HPP
