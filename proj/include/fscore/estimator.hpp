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

#ifndef FSCORE_ESTIMATOR_HPP_
#define FSCORE_ESTIMATOR_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fscore/critic.hpp"
#include "fscore/empirical.hpp"
#include "fscore/fdiv.hpp"

namespace fscore {

struct DivergenceEstimate {
  double value = 0.0;  // E_Q[t] - E_P[f^dag(t)] at the fitted critic, unclipped
  Critic critic;
  Eigen::Index n_p = 0;
  Eigen::Index n_q = 0;
  FitReport report;
};

// D^_f(Q || P) from two sample sets (P in the f^dag role, Q in the linear role).
DivergenceEstimate estimate_divergence(const FDivergenceSpec& spec, const EmpiricalDistribution& p,
                                       const EmpiricalDistribution& q, const FitConfig& config);

// Value of the variational bound for a given critic: E_Q[t] - E_P[f^dag(t)].
double variational_value(const Critic& critic, const EmpiricalDistribution& p,
                         const EmpiricalDistribution& q);

inline constexpr Eigen::Index kDefaultProductCap = 100000;

// Joint sample (x_i, y_i) and product-of-marginals sample (x_i, y_j).
//
// With n^2 <= cap the product enumerates every (i, j) with weight 1/n^2.
// Otherwise it holds exactly cap off-diagonal pairs: cap / n nonzero cyclic
// offsets over a seeded permutation give every row the same number of
// partners, the remainder goes to the first rows of the permutation, and each
// pair is weighted 1 / (n * partners(i)) so the x-marginal stays uniform.
struct JointProduct {
  EmpiricalDistribution joint;
  EmpiricalDistribution product;
  std::vector<std::vector<Eigen::Index>> row_partners;  // j's paired with x_i
  std::vector<std::vector<Eigen::Index>> col_partners;  // i's paired with y_j
  bool full = false;
};

JointProduct build_joint_and_product(const PairedSamples& pairs, std::uint64_t seed,
                                     Eigen::Index cap = kDefaultProductCap);

struct MutualInformationEstimate {
  DivergenceEstimate estimate;
  JointProduct sets;
};

// I^_f = D^_f(joint || product): the critic is fitted with the product in the
// P role and the joint in the Q role.
MutualInformationEstimate estimate_mutual_information(const FDivergenceSpec& spec,
                                                      const PairedSamples& pairs,
                                                      const FitConfig& config,
                                                      Eigen::Index cap = kDefaultProductCap);

struct ConditionalTerms {
  double joint_term = 0.0;    // t(x_i, y_i)
  double product_term = 0.0;  // mean over row partners j of f^dag(t(x_i, y_j))
};

// Terms of the sample-level payment for x-report i. Without `sets`, the
// product conditional runs over every j (full enumeration).
ConditionalTerms conditional_terms(const Critic& critic, const PairedSamples& pairs, Eigen::Index i,
                                   const JointProduct* sets = nullptr);

// Same, with the second coordinate fixed at y_j (group-Q reports).
ConditionalTerms conditional_terms_second(const Critic& critic, const PairedSamples& pairs,
                                          Eigen::Index j, const JointProduct* sets = nullptr);

nlohmann::json estimate_to_json(const DivergenceEstimate& estimate);

}  // namespace fscore

#endif  // FSCORE_ESTIMATOR_HPP_
