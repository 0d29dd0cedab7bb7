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

#ifndef FSCORE_MECHANISM_HPP_
#define FSCORE_MECHANISM_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fscore/critic.hpp"
#include "fscore/estimator.hpp"

namespace fscore {

struct MechanismConfig {
  double a = 0.0;
  double b = 1.0;  // must be > 0
  std::string divergence = "kl";
  FitConfig fit;
  std::uint64_t seed = 42;
  // Fixed-critic mode: skip the fit and score with t(x) = squash(discriminator(x)).
  std::function<double(const Eigen::RowVectorXd&)> discriminator;
};

enum class MechanismKind { kGroundTruth, kPeerPrediction };

struct Payment {
  Eigen::Index report_id = 0;
  char group = 'P';  // 'P' or 'Q'
  double score = 0.0;
};

struct PaymentSheet {
  MechanismKind mechanism = MechanismKind::kGroundTruth;
  std::string divergence;
  std::uint64_t seed = 0;
  double a = 0.0;
  double b = 1.0;
  std::vector<Payment> payments;  // group P first, in report order
  DivergenceEstimate estimate;    // D^_f(truth || reports) or I^_f

  std::string mechanism_tag() const { return mechanism == MechanismKind::kGroundTruth ? "alg1" : "alg2"; }
  // Mean score of one group.
  double mean_score(char group = 'P') const;
  // Score of report i in group P.
  double score_of(Eigen::Index i) const;
};

// Multi-sample elicitation with ground truth. Fits t with (P <- reports,
// Q <- truth) and pays S_i = a - b (E_Q[t] - f^dag(t(r_i))).
PaymentSheet score_with_ground_truth(const EmpiricalDistribution& reports,
                                     const EmpiricalDistribution& truth, const MechanismConfig& cfg);

// Peer prediction with no ground truth. Pairs report i of group P with report
// i of group Q, fits t on (product -> P, joint -> Q) and pays
// S_i = a + b (joint_term_i - product_term_i). Group-Q reports are scored with
// the second coordinate fixed.
PaymentSheet score_peer_prediction(const Eigen::MatrixXd& group_p_reports,
                                   const Eigen::MatrixXd& group_q_reports, const MechanismConfig& cfg);

// Raw discriminator whose squashed output equals the population witness
// f'(q(x)/p(x)); used for fixed-critic runs against analytic densities.
std::function<double(const Eigen::RowVectorXd&)> analytic_ratio_discriminator(
    const FDivergenceSpec& spec, const GaussianDensity& p, const GaussianDensity& q);

// CSV with columns report_id,group,score,mechanism,divergence,seed.
std::string payments_to_csv(const PaymentSheet& sheet);

}  // namespace fscore

#endif  // FSCORE_MECHANISM_HPP_
