// Copyright 2026 The fscore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <string>

#include <doctest.h>

#include "fscore/error.hpp"
#include "fscore/fdiv.hpp"
#include "fscore/lambert_w.hpp"

using namespace fscore;

namespace {

GaussianDensity normal1(double mu, double var = 1.0) {
  return GaussianDensity(Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Constant(1, 1, var));
}

double fd(double (*g)(double), double x, double h = 1e-5) { return (g(x + h) - g(x - h)) / (2.0 * h); }

}  // namespace

TEST_CASE("registry lists eight divergences and rejects unknown names") {
  const auto names = divergence_names();
  REQUIRE(names.size() == 8);
  CHECK(names.front() == "total_variation");
  CHECK(names.back() == "jeffrey");
  for (const auto& n : names) CHECK(get_divergence(n).name == n);
  try {
    get_divergence("hellinger");
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("squared_hellinger") != std::string::npos);
  }
}

TEST_CASE("generators vanish at one and conjugates match known closed forms") {
  for (const auto& n : divergence_names()) CHECK(std::abs(get_divergence(n).f(1.0)) <= 1e-12);
  const auto kl = get_divergence("kl");
  CHECK(kl.f_conj(1.0) == doctest::Approx(1.0));
  CHECK(kl.f_conj(2.5) == doctest::Approx(std::exp(1.5)));
  const auto rkl = get_divergence("reverse_kl");
  CHECK(rkl.f_conj(-2.0) == doctest::Approx(-1.0 - std::log(2.0)));
  CHECK_FALSE(rkl.conj_domain.contains(0.0));
  const auto pearson = get_divergence("pearson_chi2");
  CHECK(pearson.f_conj(2.0) == doctest::Approx(3.0));
}

TEST_CASE("jeffrey conjugate agrees with the numeric supremum") {
  const auto s = get_divergence("jeffrey");
  const Interval search{1e-8, 1e8, true, true};
  for (double u : {-5.0, -1.0, 0.0, 0.5, 2.0, 4.0}) {
    CHECK(s.f_conj(u) == doctest::Approx(numeric_conjugate(s.f, u, search)).epsilon(1e-9));
  }
}

TEST_CASE("squash lands in the conjugate domain and composites are consistent") {
  for (const auto& n : divergence_names()) {
    const auto s = get_divergence(n);
    CAPTURE(n);
    for (double v = -20.0; v <= 20.0; v += 0.5) {
      const double t = s.squash(v);
      CHECK(s.conj_domain.contains(t));
      if (std::abs(v) <= 8.0) {
        CHECK(s.conj_of_squash(v) == doctest::Approx(s.f_conj(t)).epsilon(1e-9));
        CHECK(s.squash_inverse(t) == doctest::Approx(v).epsilon(1e-7));
        CHECK(s.conj_of_squash_prime(v) == doctest::Approx(fd(s.conj_of_squash, v)).epsilon(1e-5));
        CHECK(s.squash_prime(v) == doctest::Approx(fd(s.squash, v)).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("conjugate derivative inverts f' on the ratio range") {
  for (const auto& n : divergence_names()) {
    const auto s = get_divergence(n);
    if (!s.differentiable) continue;
    CAPTURE(n);
    for (double u : {0.01, 0.3, 1.0, 2.0, 50.0}) CHECK(s.f_conj_prime(s.f_prime(u)) == doctest::Approx(u).epsilon(1e-9));
  }
}

TEST_CASE("lambert W") {
  CHECK(lambert_w0(0.0) == 0.0);
  CHECK(lambert_w0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lambert_w0(1.0) == doctest::Approx(0.5671432904097838).epsilon(1e-14));
  const double w = lambert_w0_exp(1000.0);
  CHECK(w + std::log(w) == doctest::Approx(1000.0).epsilon(1e-14));
  CHECK(lambert_w0_exp(1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("closed-form oracles against independent values") {
  const auto p = normal1(0.0);
  CHECK(closed_form_divergence(get_divergence("kl"), p, normal1(1.0)) == doctest::Approx(0.5));
  CHECK(closed_form_divergence(get_divergence("jeffrey"), p, normal1(1.0)) == doctest::Approx(1.0));
  CHECK(closed_form_divergence(get_divergence("pearson_chi2"), p, normal1(0.5)) ==
        doctest::Approx(0.2840254166877414).epsilon(1e-6));
  CHECK(closed_form_divergence(get_divergence("squared_hellinger"), p, normal1(1.0)) ==
        doctest::Approx(0.2350061948308093).epsilon(1e-6));
  CHECK(closed_form_divergence(get_divergence("total_variation"), p, normal1(1.0)) ==
        doctest::Approx(0.3829249225480261).epsilon(1e-5));
  CHECK(closed_form_divergence(get_divergence("jensen_shannon"), p, normal1(1.0)) ==
        doctest::Approx(0.2228429643694724).epsilon(1e-6));
  CHECK(closed_form_divergence(get_divergence("neyman_chi2"), p, normal1(1.0)) ==
        doctest::Approx(1.718281828459045).epsilon(1e-5));

  Eigen::Matrix2d s;
  s << 1.0, 0.5, 0.5, 1.0;
  CHECK(gaussian_mutual_information(s) == doctest::Approx(0.14384103622589042).epsilon(1e-12));
  s << 1.279, 4.392, 4.392, 16.187;
  CHECK(gaussian_mutual_information(s) == doctest::Approx(1.3421058541218056).epsilon(1e-12));
}

TEST_CASE("divergence bound under the ratio range") {
  const auto s = get_divergence("kl");
  CHECK(divergence_upper_bound(s) == doctest::Approx(1e3 * std::log(1e3)));
}

TEST_CASE("invalid inputs") {
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianDensity(Eigen::Vector2d::Zero(), bad), InvalidArgument);
  const auto s = get_divergence("kl");
  CHECK_THROWS_AS(numeric_conjugate(s.f, 0.0, Interval{0.0, 1.0, true, true}), InvalidArgument);
}
