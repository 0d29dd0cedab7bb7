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

#include "fscore/reconstruct.hpp"

#include <cmath>
#include <sstream>

#include "fscore/error.hpp"
#include "fscore/estimator.hpp"
#include "fscore/io.hpp"
#include "fscore/rng.hpp"

namespace fscore {
namespace {

constexpr Eigen::Index kMinTarget = 64;

void validate_family(const GaussianFamily& fam) {
  const Eigen::Index d = fam.dimension();
  if (d < 1 || fam.chol.rows() != d || fam.chol.cols() != d) throw InvalidArgument("family: chol must be d x d");
  if (!fam.mean.allFinite() || !fam.chol.allFinite()) throw InvalidArgument("family: non-finite parameters");
  if ((fam.chol.diagonal().array() <= 0.0).any()) throw InvalidArgument("family: chol diagonal must be positive");
}

Eigen::MatrixXd sample_covariance(const EmpiricalDistribution& target, Eigen::RowVectorXd* mean_out) {
  const Eigen::MatrixXd& x = target.points();
  const Eigen::VectorXd& w = target.weights();
  const Eigen::RowVectorXd mean = w.transpose() * x;
  const Eigen::MatrixXd c = x.rowwise() - mean;
  if (mean_out) *mean_out = mean;
  return c.transpose() * w.asDiagonal() * c;
}

}  // namespace

Eigen::MatrixXd GaussianFamily::sample(Eigen::Index m, std::uint64_t round, Eigen::MatrixXd* noise) const {
  Rng rng(derive_seed({seed, round}));
  Eigen::MatrixXd z(m, dimension());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < dimension(); ++k) z(i, k) = rng.normal();
  }
  Eigen::MatrixXd x = (z * chol.transpose()).rowwise() + mean.transpose();
  if (noise) *noise = std::move(z);
  return x;
}

GaussianFamily GaussianFamily::standard(Eigen::Index d, std::uint64_t seed) {
  return GaussianFamily{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d), seed};
}

GaussianFamily GaussianFamily::from_moments(const EmpiricalDistribution& target, std::uint64_t seed) {
  Eigen::RowVectorXd mean;
  const Eigen::MatrixXd cov = sample_covariance(target, &mean);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("target sample covariance is not positive definite");
  return GaussianFamily{mean.transpose(), llt.matrixL(), seed};
}

GaussianFamily GaussianFamily::from_diagonal_moments(const EmpiricalDistribution& target, std::uint64_t seed) {
  Eigen::RowVectorXd mean;
  const Eigen::MatrixXd cov = sample_covariance(target, &mean);
  return GaussianFamily{mean.transpose(), cov.diagonal().cwiseSqrt().asDiagonal(), seed};
}

GaussianDensity moment_fit(const EmpiricalDistribution& target) {
  Eigen::RowVectorXd mean;
  const Eigen::MatrixXd cov = sample_covariance(target, &mean);
  return GaussianDensity(mean.transpose(), cov);
}

ReconstructionReport reconstruct(const EmpiricalDistribution& target, const GaussianFamily& init,
                                 const FDivergenceSpec& spec, const ScheduleConfig& schedule) {
  if (target.size() < kMinTarget) throw InvalidArgument("reconstruct: target n below minimum 64");
  if (init.dimension() != target.dimension()) throw InvalidArgument("reconstruct: family dimension mismatch");
  validate_family(init);
  if (schedule.rounds < 1 || schedule.generator_steps < 1 || !(schedule.step_size > 0.0) ||
      !(schedule.decay > 0.0 && schedule.decay <= 1.0) || schedule.max_batch < kMinFitSamples ||
      !(schedule.min_diagonal > 0.0)) {
    throw InvalidArgument("reconstruct: invalid schedule");
  }
  if (!spec.differentiable) throw InvalidArgument("reconstruct: divergence has no smooth conjugate");

  const Eigen::Index d = init.dimension();
  const Eigen::Index m = std::min(target.size(), schedule.max_batch);
  GaussianFamily fam = init;
  ReconstructionReport report;

  // Critic basis is fixed from the target and the first generator batch.
  EmpiricalDistribution first_batch(fam.sample(m, 0));
  Critic critic = make_critic(schedule.critic.critic, spec, first_batch, target, schedule.critic.optimizer.seed);

  double step = schedule.step_size;
  std::uint64_t draw = 0;
  for (int round = 0; round < schedule.rounds; ++round) {
    const EmpiricalDistribution gen(fam.sample(m, draw++));
    refine(critic, gen, target, schedule.critic.optimizer);
    const double value = variational_value(critic, gen, target);
    if (!std::isfinite(value)) throw NumericalError("reconstruct: non-finite divergence estimate");
    report.trajectory.push_back(value);

    for (int s = 0; s < schedule.generator_steps; ++s) {
      Eigen::MatrixXd z;
      const Eigen::MatrixXd x = fam.sample(m, draw++, &z);
      const Eigen::VectorXd raw = critic.raw(x);
      Eigen::VectorXd h(m);
      for (Eigen::Index i = 0; i < m; ++i) h(i) = spec.conj_of_squash_prime(raw(i));
      // d/dx of -mean f^dag(t(x)); the target term does not depend on theta.
      const Eigen::MatrixXd g = -(critic.raw_input_gradient(x).array().colwise() * h.array()).matrix() /
                                static_cast<double>(m);
      const Eigen::VectorXd grad_mean = g.colwise().sum().transpose();
      const Eigen::MatrixXd grad_chol = (g.transpose() * z).triangularView<Eigen::Lower>();
      if (!grad_mean.allFinite() || !grad_chol.allFinite()) throw NumericalError("reconstruct: non-finite gradient");

      fam.mean -= step * grad_mean;
      fam.chol -= step * grad_chol;
      bool repaired = false;
      for (Eigen::Index k = 0; k < d; ++k) {
        if (fam.chol(k, k) < schedule.min_diagonal) {
          fam.chol(k, k) = schedule.min_diagonal;
          repaired = true;
        }
      }
      report.repairs += repaired;
      step *= schedule.decay;
    }
    report.rounds = round + 1;
  }

  const GaussianDensity target_fit = moment_fit(target);
  const GaussianDensity q_hat(fam.mean, fam.covariance());
  report.oracle = closed_form_divergence(spec, q_hat, target_fit);
  report.oracle_kl = gaussian_kl(q_hat, target_fit);
  report.family = std::move(fam);
  return report;
}

nlohmann::json reconstruction_to_json(const ReconstructionReport& report, const std::string& divergence) {
  const Eigen::Index d = report.family.dimension();
  nlohmann::json mean = nlohmann::json::array();
  nlohmann::json chol = nlohmann::json::array();
  nlohmann::json cov = nlohmann::json::array();
  const Eigen::MatrixXd sigma = report.family.covariance();
  for (Eigen::Index i = 0; i < d; ++i) {
    mean.push_back(report.family.mean(i));
    nlohmann::json lrow = nlohmann::json::array();
    nlohmann::json crow = nlohmann::json::array();
    for (Eigen::Index j = 0; j < d; ++j) {
      lrow.push_back(report.family.chol(i, j));
      crow.push_back(sigma(i, j));
    }
    chol.push_back(lrow);
    cov.push_back(crow);
  }
  return nlohmann::json{{"divergence", divergence},
                        {"mean", mean},
                        {"chol", chol},
                        {"covariance", cov},
                        {"trajectory", report.trajectory},
                        {"oracle", report.oracle},
                        {"oracle_kl", report.oracle_kl},
                        {"rounds", report.rounds},
                        {"repairs", report.repairs},
                        {"seed", report.family.seed}};
}

std::string trajectory_to_csv(const ReconstructionReport& report) {
  std::ostringstream out;
  out << "round,objective\n";
  for (std::size_t r = 0; r < report.trajectory.size(); ++r) {
    out << r << ',' << format_double(report.trajectory[r]) << '\n';
  }
  return out.str();
}

}  // namespace fscore
