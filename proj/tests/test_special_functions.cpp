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
#include <initializer_list>

#include "doctest.h"

namespace {

// Independent oracle: erf by its Maclaurin series. Converges to full double
// precision for |z| <= 3, which covers every anchor below.
double erf_series(double z) {
  double term = z;          // z^(2n+1) * (-1)^n / (n! (2n+1)), n = 0
  double sum = z;
  for (int n = 1; n < 200; ++n) {
    term *= -z * z / n;
    double contrib = term / (2 * n + 1);
    sum += contrib;
    if (std::abs(contrib) < 1e-18 * std::abs(sum)) break;
  }
  return sum * 2.0 / std::sqrt(M_PI);
}

double normal_cdf_series(double x) { return 0.5 * (1.0 + erf_series(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("normal cdf matches series oracle at fixed anchors") {
  CHECK(rce::stats::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  // Phi(1) computed from the series oracle; value frozen.
  CHECK(rce::stats::normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-13));
  CHECK(rce::stats::normal_cdf(-2.5) == doctest::Approx(0.006209665325776132).epsilon(1e-12));
  for (double x : {-3.0, -1.7, -0.3, 0.4, 1.2, 2.8}) {
    CHECK(rce::stats::normal_cdf(x) == doctest::Approx(normal_cdf_series(x)).epsilon(1e-13));
  }
}

TEST_CASE("two-sided normal mass at 1.959964 is 0.95") {
  double phi = rce::stats::normal_cdf(1.959964);
  CHECK(std::abs(2.0 * phi - 1.0 - 0.95) < 1e-6);
  // Cross-check against the series oracle as well.
  CHECK(std::abs(2.0 * normal_cdf_series(1.959964) - 1.0 - 0.95) < 1e-6);
}

TEST_CASE("normal quantile inverts the cdf to 1e-12") {
  CHECK(rce::stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(rce::stats::normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  for (double p : {1e-6, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    double x = rce::stats::normal_quantile(p);
    CHECK(rce::stats::normal_cdf(x) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS(rce::stats::normal_quantile(0.0));
  CHECK_THROWS(rce::stats::normal_quantile(1.0));
  CHECK_THROWS(rce::stats::normal_quantile(-0.2));
}

TEST_CASE("regularized incomplete gamma at closed-form anchors") {
  // P(1/2, x) = erf(sqrt(x)); anchor from the series oracle.
  CHECK(rce::stats::regularized_gamma_p(0.5, 0.25) ==
        doctest::Approx(erf_series(0.5)).epsilon(1e-13));
  // Integer a: Q(a,x) is a truncated Poisson sum; P(3,2) = 1 - 5 e^-2.
  CHECK(rce::stats::regularized_gamma_p(3.0, 2.0) ==
        doctest::Approx(1.0 - 5.0 * std::exp(-2.0)).epsilon(1e-13));
  // P(1, x) = 1 - e^-x exercises both the series and continued-fraction arms.
  for (double x : {0.3, 0.9, 1.999, 2.001, 7.5, 30.0}) {
    CHECK(rce::stats::regularized_gamma_p(1.0, x) ==
          doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-13));
  }
  CHECK(rce::stats::regularized_gamma_p(2.0, 0.0) == 0.0);
}

TEST_CASE("chi-square cdf with k=2 equals 1 - exp(-x/2)") {
  for (double x : {0.01, 0.5, 1.0, 3.7, 10.0}) {
    CHECK(rce::stats::chi2_cdf(2.0, x) ==
          doctest::Approx(1.0 - std::exp(-x / 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("chi-square quantile inverts the cdf across dimensions") {
  // k=1: quantile(0.95) = z_{0.975}^2.
  double z = 1.959963984540054;
  CHECK(rce::stats::chi2_quantile(1.0, 0.95) == doctest::Approx(z * z).epsilon(1e-11));
  // k=2 closed form: -2 ln(1-alpha).
  CHECK(rce::stats::chi2_quantile(2.0, 0.95) ==
        doctest::Approx(-2.0 * std::log(0.05)).epsilon(1e-12));
  for (double k : {1.0, 2.0, 8.0, 34.0}) {
    for (double a : {0.01, 0.2, 0.5, 0.9, 0.999}) {
      double x = rce::stats::chi2_quantile(k, a);
      CHECK(rce::stats::chi2_cdf(k, x) == doctest::Approx(a).epsilon(1e-11));
    }
  }
  CHECK_THROWS(rce::stats::chi2_quantile(2.0, 0.0));
  CHECK_THROWS(rce::stats::chi2_quantile(2.0, 1.0));
}

TEST_CASE("cdfs are monotone") {
  double prev = -1.0;
  for (double x = 0.0; x <= 20.0; x += 0.25) {
    double v = rce::stats::chi2_cdf(8.0, x);
    CHECK(v >= prev);
    prev = v;
  }
  prev = -1.0;
  for (double x = -8.0; x <= 8.0; x += 0.125) {
    double v = rce::stats::normal_cdf(x);
    CHECK(v >= prev);
    prev = v;
  }
}
