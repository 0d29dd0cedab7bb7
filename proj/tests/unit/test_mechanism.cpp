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
#include <sstream>

#include <doctest.h>

#include "fscore/error.hpp"
#include "fscore/mechanism.hpp"
#include "fscore/rng.hpp"

using namespace fscore;

namespace {

Eigen::MatrixXd normals(Rng& rng, Eigen::Index n, Eigen::Index d, double shift = 0.0) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = shift + rng.normal();
  }
  return x;
}

double total(const PaymentSheet& s, char group) {
  double acc = 0.0;
  for (const auto& p : s.payments) acc += p.group == group ? p.score : 0.0;
  return acc;
}

}  // namespace

TEST_CASE("ground truth: reports equal to the truth earn about a") {
  Rng rng(1);
  const EmpiricalDistribution x(normals(rng, 400, 2));
  MechanismConfig cfg;
  const PaymentSheet s = score_with_ground_truth(x, x, cfg);
  CHECK(s.payments.size() == 400);
  CHECK(s.mechanism_tag() == "alg1");
  CHECK(std::abs(s.mean_score('P')) < 0.05);
}

TEST_CASE("ground truth: affine payments and the budget identity") {
  Rng rng(2);
  const EmpiricalDistribution reports(normals(rng, 300, 1, 0.4)), truth(normals(rng, 300, 1));
  MechanismConfig unit;
  MechanismConfig scaled = unit;
  scaled.a = 5.0;
  scaled.b = 2.0;
  const PaymentSheet s1 = score_with_ground_truth(reports, truth, unit);
  const PaymentSheet s2 = score_with_ground_truth(reports, truth, scaled);
  for (std::size_t i = 0; i < s1.payments.size(); ++i) {
    CHECK(s2.payments[i].score == doctest::Approx(5.0 + 2.0 * s1.payments[i].score).epsilon(1e-12));
  }
  CHECK(std::abs(total(s2, 'P') - (300 * 5.0 - 300 * 2.0 * s2.estimate.value)) < 1e-9);
  CHECK(s1.estimate.value > 0.0);
}

TEST_CASE("peer prediction: budget identity, group Q scores, independence") {
  Rng rng(3);
  const Eigen::MatrixXd gp = normals(rng, 200, 1);
  Eigen::MatrixXd gq = 0.8 * gp + 0.6 * normals(rng, 200, 1);
  MechanismConfig cfg;
  cfg.a = 1.5;
  cfg.b = 0.5;
  const PaymentSheet s = score_peer_prediction(gp, gq, cfg);
  CHECK(s.mechanism_tag() == "alg2");
  CHECK(s.payments.size() == 400);
  CHECK(std::abs(total(s, 'P') - (200 * 1.5 + 200 * 0.5 * s.estimate.value)) < 1e-9);
  CHECK(std::abs(total(s, 'Q') - (200 * 1.5 + 200 * 0.5 * s.estimate.value)) < 1e-9);  // full enumeration

  const PaymentSheet ind = score_peer_prediction(normals(rng, 300, 1), normals(rng, 300, 1), MechanismConfig{});
  CHECK(std::abs(ind.mean_score('P')) < 0.05);
}

TEST_CASE("fixed-critic mode with the analytic density ratio") {
  Rng rng(4);
  const GaussianDensity p(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  const GaussianDensity q(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Identity(1, 1));
  MechanismConfig cfg;
  cfg.discriminator = analytic_ratio_discriminator(get_divergence("kl"), p, q);
  const EmpiricalDistribution reports(p.sample(rng, 20000)), truth(q.sample(rng, 20000));
  const PaymentSheet s = score_with_ground_truth(reports, truth, cfg);
  CHECK(s.estimate.value == doctest::Approx(0.5).epsilon(0.06));
  CHECK(s.estimate.critic.class_tag() == "external");
  CHECK(std::abs(total(s, 'P') + 20000 * s.estimate.value) < 1e-8);
}

TEST_CASE("mechanism preconditions") {
  Rng rng(5);
  const Eigen::MatrixXd a = normals(rng, 20, 1), b = normals(rng, 21, 1);
  MechanismConfig bad;
  bad.b = 0.0;
  CHECK_THROWS_AS(score_peer_prediction(a, a, bad), InvalidArgument);
  CHECK_THROWS_AS(score_peer_prediction(a, b, MechanismConfig{}), InvalidArgument);
  CHECK_THROWS_AS(score_peer_prediction(a.topRows(7), a.topRows(7), MechanismConfig{}), InvalidArgument);
  CHECK_THROWS_AS(
      score_with_ground_truth(EmpiricalDistribution(a), EmpiricalDistribution(normals(rng, 20, 2)), MechanismConfig{}),
      InvalidArgument);
}

TEST_CASE("payment csv") {
  Rng rng(6);
  const Eigen::MatrixXd a = normals(rng, 16, 1);
  MechanismConfig cfg;
  cfg.seed = 9;
  const PaymentSheet s = score_peer_prediction(a, a, cfg);
  std::istringstream csv(payments_to_csv(s));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "report_id,group,score,mechanism,divergence,seed");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.find(",alg2,kl,9") != std::string::npos);
  }
  CHECK(rows == 32);
}

TEST_CASE("reports that cannot cover the truth hit the ratio bound and lose") {
  Rng rng(21);
  const Eigen::MatrixXd truth = normals(rng, 300, 1);
  Eigen::MatrixXd narrow(300, 1);
  for (Eigen::Index i = 0; i < narrow.rows(); ++i) narrow(i, 0) = rng.uniform(0.0, 0.5);
  MechanismConfig cfg;
  const PaymentSheet bad = score_with_ground_truth(EmpiricalDistribution(narrow), EmpiricalDistribution(truth), cfg);
  INFO("estimate " << bad.estimate.value);
  CHECK(bad.estimate.report.ratio_bound_hit);
  CHECK(bad.estimate.value >= divergence_upper_bound(get_divergence("kl")));
  for (const auto& p : bad.payments) CHECK(std::isfinite(p.score));

  const PaymentSheet good =
      score_with_ground_truth(EmpiricalDistribution(normals(rng, 300, 1)), EmpiricalDistribution(truth), cfg);
  CHECK_FALSE(good.estimate.report.ratio_bound_hit);
  CHECK(good.mean_score('P') > bad.mean_score('P'));
}
