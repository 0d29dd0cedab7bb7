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

#include "fscore/estimator.hpp"

#include <algorithm>
#include <numeric>

#include "fscore/error.hpp"
#include "fscore/rng.hpp"

namespace fscore {

double variational_value(const Critic& critic, const EmpiricalDistribution& p,
                         const EmpiricalDistribution& q) {
  return -objective(critic, p, q);
}

DivergenceEstimate estimate_divergence(const FDivergenceSpec& spec, const EmpiricalDistribution& p,
                                       const EmpiricalDistribution& q, const FitConfig& config) {
  FitResult fitted = fit(config, spec, p, q);
  const double value = variational_value(fitted.critic, p, q);
  if (!std::isfinite(value)) throw NumericalError("divergence estimate is not finite");
  return DivergenceEstimate{value, std::move(fitted.critic), p.size(), q.size(), std::move(fitted.report)};
}

JointProduct build_joint_and_product(const PairedSamples& pairs, std::uint64_t seed, Eigen::Index cap) {
  const Eigen::Index n = pairs.size();
  if (n < kMinFitSamples) throw InvalidArgument("paired samples: n below minimum 8");
  if (cap < n) throw InvalidArgument("product cap must be at least n");
  const Eigen::Index dx = pairs.x_dimension();
  const Eigen::Index d = dx + pairs.y_dimension();

  Eigen::MatrixXd joint(n, d);
  joint << pairs.x(), pairs.y();

  std::vector<std::vector<Eigen::Index>> rows(static_cast<std::size_t>(n));
  std::vector<std::vector<Eigen::Index>> cols(static_cast<std::size_t>(n));
  const bool full = n * n <= cap;
  if (full) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        rows[static_cast<std::size_t>(i)].push_back(j);
        cols[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  } else {
    Rng rng(seed);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    rng.shuffle(perm.begin(), perm.end());
    std::vector<Eigen::Index> offsets(static_cast<std::size_t>(n - 1));
    std::iota(offsets.begin(), offsets.end(), Eigen::Index{1});
    rng.shuffle(offsets.begin(), offsets.end());

    const Eigen::Index per_row = cap / n;
    const Eigen::Index extra = cap - per_row * n;
    for (Eigen::Index pos = 0; pos < n; ++pos) {
      const Eigen::Index i = perm[static_cast<std::size_t>(pos)];
      const Eigen::Index count = per_row + (pos < extra ? 1 : 0);
      for (Eigen::Index k = 0; k < count; ++k) {
        const Eigen::Index j = perm[static_cast<std::size_t>((pos + offsets[static_cast<std::size_t>(k)]) % n)];
        rows[static_cast<std::size_t>(i)].push_back(j);
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& r = rows[static_cast<std::size_t>(i)];
      std::sort(r.begin(), r.end());
      for (Eigen::Index j : r) cols[static_cast<std::size_t>(j)].push_back(i);
    }
  }

  Eigen::Index total = 0;
  for (const auto& r : rows) total += static_cast<Eigen::Index>(r.size());
  Eigen::MatrixXd product(total, d);
  Eigen::VectorXd weights(total);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    const double w = 1.0 / (static_cast<double>(n) * static_cast<double>(r.size()));
    for (Eigen::Index j : r) {
      product.row(row).head(dx) = pairs.x().row(i);
      product.row(row).tail(d - dx) = pairs.y().row(j);
      weights(row) = w;
      ++row;
    }
  }
  // Renormalize against rounding in the per-row weights.
  weights /= weights.sum();

  return JointProduct{EmpiricalDistribution(std::move(joint)),
                      EmpiricalDistribution(std::move(product), std::move(weights)), std::move(rows),
                      std::move(cols), full};
}

MutualInformationEstimate estimate_mutual_information(const FDivergenceSpec& spec,
                                                      const PairedSamples& pairs,
                                                      const FitConfig& config, Eigen::Index cap) {
  JointProduct sets = build_joint_and_product(pairs, derive_seed({config.optimizer.seed, 0x5052ULL}), cap);
  DivergenceEstimate est = estimate_divergence(spec, sets.product, sets.joint, config);
  return MutualInformationEstimate{std::move(est), std::move(sets)};
}

namespace {

ConditionalTerms terms_along(const Critic& critic, const PairedSamples& pairs, Eigen::Index fixed,
                             bool fix_first, const JointProduct* sets) {
  const Eigen::Index n = pairs.size();
  if (fixed < 0 || fixed >= n) throw InvalidArgument("conditional_terms: index out of range");
  std::vector<Eigen::Index> all;
  const std::vector<Eigen::Index>* partners = nullptr;
  if (sets != nullptr) {
    partners = fix_first ? &sets->row_partners[static_cast<std::size_t>(fixed)]
                         : &sets->col_partners[static_cast<std::size_t>(fixed)];
  } else {
    all.resize(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    partners = &all;
  }
  const Eigen::Index d = pairs.x_dimension() + pairs.y_dimension();
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(partners->size()) + 1, d);
  pts.row(0) = pairs.concat(fixed, fixed);
  for (std::size_t k = 0; k < partners->size(); ++k) {
    const Eigen::Index other = (*partners)[k];
    pts.row(static_cast<Eigen::Index>(k) + 1) =
        fix_first ? pairs.concat(fixed, other) : pairs.concat(other, fixed);
  }
  const Eigen::VectorXd raw = critic.raw(pts);
  const auto& spec = critic.divergence();
  ConditionalTerms out;
  out.joint_term = spec.squash(raw(0));
  double acc = 0.0;
  for (Eigen::Index k = 1; k < raw.size(); ++k) acc += spec.conj_of_squash(raw(k));
  out.product_term = acc / static_cast<double>(partners->size());
  return out;
}

}  // namespace

ConditionalTerms conditional_terms(const Critic& critic, const PairedSamples& pairs, Eigen::Index i,
                                   const JointProduct* sets) {
  return terms_along(critic, pairs, i, true, sets);
}

ConditionalTerms conditional_terms_second(const Critic& critic, const PairedSamples& pairs,
                                          Eigen::Index j, const JointProduct* sets) {
  return terms_along(critic, pairs, j, false, sets);
}

nlohmann::json estimate_to_json(const DivergenceEstimate& estimate) {
  return nlohmann::json{{"divergence", std::string(estimate.critic.divergence().name)},
                        {"n", std::min(estimate.n_p, estimate.n_q)},
                        {"n_p", estimate.n_p},
                        {"n_q", estimate.n_q},
                        {"seed", estimate.report.seed},
                        {"value", estimate.value},
                        {"iterations", estimate.report.iterations},
                        {"converged", estimate.report.converged},
                        {"ratio_bound_hit", estimate.report.ratio_bound_hit}};
}

}  // namespace fscore
