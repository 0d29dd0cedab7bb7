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

#include "fscore/mechanism.hpp"

#include <cmath>
#include <sstream>

#include "fscore/error.hpp"
#include "fscore/io.hpp"

namespace fscore {
namespace {

void validate(const MechanismConfig& cfg) {
  if (!(cfg.b > 0.0) || !std::isfinite(cfg.b)) throw InvalidArgument("mechanism: b must be > 0");
  if (!std::isfinite(cfg.a)) throw InvalidArgument("mechanism: a must be finite");
}

FitConfig seeded(const MechanismConfig& cfg) {
  FitConfig fc = cfg.fit;
  fc.optimizer.seed = cfg.seed;
  return fc;
}

Critic external_critic(const MechanismConfig& cfg, const FDivergenceSpec& spec, Eigen::Index dim) {
  return Critic(ExternalCritic{cfg.discriminator, dim}, spec);
}

PaymentSheet make_sheet(MechanismKind kind, const MechanismConfig& cfg, DivergenceEstimate estimate) {
  return PaymentSheet{kind, cfg.divergence, cfg.seed, cfg.a, cfg.b, {}, std::move(estimate)};
}

DivergenceEstimate fixed_estimate(Critic critic, double value, Eigen::Index n_p, Eigen::Index n_q,
                                  std::uint64_t seed) {
  FitReport report;
  report.seed = seed;
  report.objective = -value;
  report.penalized_objective = -value;
  report.converged = true;
  return DivergenceEstimate{value, std::move(critic), n_p, n_q, report};
}

}  // namespace

double PaymentSheet::mean_score(char group) const {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& p : payments) {
    if (p.group == group) {
      acc += p.score;
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("payment sheet has no reports in group " + std::string(1, group));
  return acc / static_cast<double>(count);
}

double PaymentSheet::score_of(Eigen::Index i) const {
  if (i < 0 || i >= static_cast<Eigen::Index>(payments.size()) || payments[static_cast<std::size_t>(i)].group != 'P') {
    throw InvalidArgument("score_of: report index out of range");
  }
  return payments[static_cast<std::size_t>(i)].score;
}

PaymentSheet score_with_ground_truth(const EmpiricalDistribution& reports,
                                     const EmpiricalDistribution& truth, const MechanismConfig& cfg) {
  validate(cfg);
  if (reports.size() < kMinFitSamples || truth.size() < kMinFitSamples) {
    throw InvalidArgument("score_with_ground_truth: n below minimum 8");
  }
  if (reports.dimension() != truth.dimension()) throw InvalidArgument("reports and truth differ in dimension");
  const FDivergenceSpec spec = get_divergence(cfg.divergence);

  PaymentSheet sheet = [&] {
    if (!cfg.discriminator) {
      return make_sheet(MechanismKind::kGroundTruth, cfg, estimate_divergence(spec, reports, truth, seeded(cfg)));
    }
    Critic critic = external_critic(cfg, spec, reports.dimension());
    const double value = variational_value(critic, reports, truth);
    return make_sheet(MechanismKind::kGroundTruth, cfg,
                      fixed_estimate(std::move(critic), value, reports.size(), truth.size(), cfg.seed));
  }();

  const Critic& critic = sheet.estimate.critic;
  const double truth_mean = truth.mean_of(critic.evaluate(truth.points()));
  const Eigen::VectorXd raw = critic.raw(reports.points());
  sheet.payments.reserve(static_cast<std::size_t>(reports.size()));
  for (Eigen::Index i = 0; i < reports.size(); ++i) {
    const double score = cfg.a - cfg.b * (truth_mean - spec.conj_of_squash(raw(i)));
    if (!std::isfinite(score)) throw NumericalError("non-finite payment for report " + std::to_string(i));
    sheet.payments.push_back({i, 'P', score});
  }
  return sheet;
}

PaymentSheet score_peer_prediction(const Eigen::MatrixXd& group_p_reports,
                                   const Eigen::MatrixXd& group_q_reports, const MechanismConfig& cfg) {
  validate(cfg);
  if (group_p_reports.rows() != group_q_reports.rows()) {
    throw InvalidArgument("score_peer_prediction: group sizes differ");
  }
  if (group_p_reports.rows() < kMinFitSamples) throw InvalidArgument("score_peer_prediction: n below minimum 8");
  const FDivergenceSpec spec = get_divergence(cfg.divergence);
  const PairedSamples pairs(group_p_reports, group_q_reports);
  const Eigen::Index n = pairs.size();

  JointProduct sets = build_joint_and_product(pairs, derive_seed({cfg.seed, 0x5052ULL}));
  PaymentSheet sheet = [&] {
    if (!cfg.discriminator) {
      MutualInformationEstimate mi = estimate_mutual_information(spec, pairs, seeded(cfg));
      sets = std::move(mi.sets);
      return make_sheet(MechanismKind::kPeerPrediction, cfg, std::move(mi.estimate));
    }
    Critic critic = external_critic(cfg, spec, pairs.x_dimension() + pairs.y_dimension());
    const double value = variational_value(critic, sets.product, sets.joint);
    return make_sheet(MechanismKind::kPeerPrediction, cfg,
                      fixed_estimate(std::move(critic), value, sets.product.size(), sets.joint.size(), cfg.seed));
  }();

  const Critic& critic = sheet.estimate.critic;
  sheet.payments.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const ConditionalTerms t = conditional_terms(critic, pairs, i, &sets);
    const double score = cfg.a + cfg.b * (t.joint_term - t.product_term);
    if (!std::isfinite(score)) throw NumericalError("non-finite payment for report " + std::to_string(i));
    sheet.payments.push_back({i, 'P', score});
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const ConditionalTerms t = conditional_terms_second(critic, pairs, j, &sets);
    const double score = cfg.a + cfg.b * (t.joint_term - t.product_term);
    if (!std::isfinite(score)) throw NumericalError("non-finite payment for report " + std::to_string(j));
    sheet.payments.push_back({j, 'Q', score});
  }
  return sheet;
}

std::function<double(const Eigen::RowVectorXd&)> analytic_ratio_discriminator(
    const FDivergenceSpec& spec, const GaussianDensity& p, const GaussianDensity& q) {
  if (p.dimension() != q.dimension()) throw InvalidArgument("analytic discriminator: dimension mismatch");
  return [spec, p, q](const Eigen::RowVectorXd& x) {
    const Eigen::VectorXd col = x.transpose();
    const double ratio = std::exp(q.log_pdf(col) - p.log_pdf(col));
    return spec.squash_inverse(spec.f_prime(ratio));
  };
}

std::string payments_to_csv(const PaymentSheet& sheet) {
  std::ostringstream out;
  out << "report_id,group,score,mechanism,divergence,seed\n";
  for (const auto& p : sheet.payments) {
    out << p.report_id << ',' << p.group << ',' << format_double(p.score) << ',' << sheet.mechanism_tag()
        << ',' << sheet.divergence << ',' << sheet.seed << '\n';
  }
  return out.str();
}

}  // namespace fscore
