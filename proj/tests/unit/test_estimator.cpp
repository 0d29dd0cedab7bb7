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
#include <set>

#include <doctest.h>

#include "fscore/error.hpp"
#include "fscore/estimator.hpp"
#include "fscore/rng.hpp"

using namespace fscore;

namespace {

Eigen::MatrixXd normals(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  }
  return x;
}

PairedSamples correlated(std::uint64_t seed, Eigen::Index n, double rho) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, 1), y(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    y(i, 0) = rho * x(i, 0) + std::sqrt(1.0 - rho * rho) * rng.normal();
  }
  return PairedSamples(x, y);
}

}  // namespace

TEST_CASE("identical point sets give zero total variation") {
  Rng rng(1);
  const EmpiricalDistribution p(normals(rng, 300, 2));
  const auto est = estimate_divergence(get_divergence("total_variation"), p, p, FitConfig{});
  CHECK(std::abs(est.value) <= 0.02);
}

TEST_CASE("independent redraws of one law concentrate near zero") {
  Rng rng(2);
  const EmpiricalDistribution p(normals(rng, 1000, 2)), q(normals(rng, 1000, 2));
  const auto est = estimate_divergence(get_divergence("kl"), p, q, FitConfig{});
  CHECK(est.value >= -0.05);
  CHECK(est.value <= 0.1);
  CHECK(est.n_p == 1000);
  const auto doc = estimate_to_json(est);
  for (const char* key : {"divergence", "n", "seed", "value", "iterations"}) CHECK(doc.contains(key));
}

TEST_CASE("full enumeration of the product for small n") {
  Eigen::MatrixXd x(8, 1), y(8, 1);
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = i;
    y(i, 0) = 10 * i;
  }
  const JointProduct jp = build_joint_and_product(PairedSamples(x, y), 1);
  CHECK(jp.full);
  REQUIRE(jp.product.size() == 64);
  std::set<std::pair<int, int>> seen;
  for (Eigen::Index k = 0; k < 64; ++k) {
    seen.insert({static_cast<int>(jp.product.points()(k, 0)), static_cast<int>(jp.product.points()(k, 1))});
    CHECK(jp.product.weights()(k) == doctest::Approx(1.0 / 64));
  }
  CHECK(seen.size() == 64);
  CHECK(jp.joint.points()(3, 1) == 30);
  CHECK_THROWS_AS(build_joint_and_product(PairedSamples(x.topRows(7), y.topRows(7)), 1), InvalidArgument);
}

TEST_CASE("capped product: exact size, no diagonal, uniform row marginal, deterministic") {
  const PairedSamples pairs = correlated(3, 1000, 0.3);
  const JointProduct a = build_joint_and_product(pairs, 77);
  const JointProduct b = build_joint_and_product(pairs, 77);
  CHECK_FALSE(a.full);
  CHECK(a.product.size() == kDefaultProductCap);
  CHECK(a.product.points() == b.product.points());
  CHECK(a.product.weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (Eigen::Index i = 0; i < 1000; ++i) {
    const auto& partners = a.row_partners[static_cast<std::size_t>(i)];
    CHECK(partners.size() >= 100);
    for (Eigen::Index j : partners) REQUIRE(j != i);
  }
}

TEST_CASE("mutual information: independence and a correlated oracle") {
  FitConfig cfg;
  const auto kl = get_divergence("kl");
  const auto zero = estimate_mutual_information(kl, correlated(4, 300, 0.0), cfg);
  CHECK(std::abs(zero.estimate.value) < 0.05);
  const auto half = estimate_mutual_information(kl, correlated(5, 3000, 0.5), cfg);
  CHECK(std::abs(half.estimate.value - 0.14384103622589042) < 0.05);
}

TEST_CASE("conditional terms average to the estimate") {
  const auto kl = get_divergence("kl");
  for (Eigen::Index n : {200, 400}) {  // 400^2 exceeds the cap: subsampled partners
    const PairedSamples pairs = correlated(6 + n, n, 0.6);
    const auto mi = estimate_mutual_information(kl, pairs, FitConfig{});
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto t = conditional_terms(mi.estimate.critic, pairs, i, &mi.sets);
      acc += t.joint_term - t.product_term;
    }
    CHECK(std::abs(acc / n - mi.estimate.value) < 1e-10);
  }
}

TEST_CASE("conditional terms for a single pair and out-of-range indices") {
  const auto spec = get_divergence("kl");
  const Critic c(ExternalCritic{[](const Eigen::RowVectorXd& x) { return 0.3 * x(0) - x(1); }, 2}, spec);
  const PairedSamples one(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Constant(1, 1, 0.5));
  const auto t = conditional_terms(c, one, 0);
  CHECK(t.joint_term == doctest::Approx(0.1));
  CHECK(t.product_term == doctest::Approx(spec.f_conj(0.1)));
  CHECK_THROWS_AS(conditional_terms(c, one, 1), InvalidArgument);
}
