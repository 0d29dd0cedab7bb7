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

#ifndef FSCORE_RECONSTRUCT_HPP_
#define FSCORE_RECONSTRUCT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fscore/critic.hpp"
#include "fscore/empirical.hpp"
#include "fscore/fdiv.hpp"

namespace fscore {

// Full-covariance Gaussian generator x = mean + chol * z, z ~ N(0, I).
struct GaussianFamily {
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;  // lower triangular, diagonal > 0
  std::uint64_t seed = 42;

  Eigen::Index dimension() const { return mean.size(); }
  Eigen::MatrixXd covariance() const { return chol * chol.transpose(); }
  // m generator draws for one round; deterministic in (seed, round).
  Eigen::MatrixXd sample(Eigen::Index m, std::uint64_t round, Eigen::MatrixXd* noise = nullptr) const;

  static GaussianFamily standard(Eigen::Index d, std::uint64_t seed = 42);
  // Moment-matched start: sample mean and Cholesky of the sample covariance.
  static GaussianFamily from_moments(const EmpiricalDistribution& target, std::uint64_t seed = 42);
  // Sample mean and marginal standard deviations, no correlation.
  static GaussianFamily from_diagonal_moments(const EmpiricalDistribution& target, std::uint64_t seed = 42);
};

struct ScheduleConfig {
  int rounds = 200;
  int generator_steps = 5;  // per round
  double step_size = 0.05;
  double decay = 0.999;  // per generator step
  Eigen::Index max_batch = 1024;
  double min_diagonal = 1e-4;
  FitConfig critic;  // inner fit; the Newton refit warm-starts every round
};

struct ReconstructionReport {
  GaussianFamily family;
  std::vector<double> trajectory;  // D^_f(target || generator) after each inner fit
  double oracle = 0.0;             // closed-form D_f(moment-fit target || generator)
  double oracle_kl = 0.0;          // closed-form KL(generator || moment-fit target)
  int rounds = 0;
  int repairs = 0;  // steps whose diagonal had to be projected back
};

// Inner: fit a critic separating generator draws (P) from the target (Q).
// Outer: gradient steps on (mean, chol) against the estimated divergence,
// differentiating through x = mean + chol * z.
ReconstructionReport reconstruct(const EmpiricalDistribution& target, const GaussianFamily& init,
                                 const FDivergenceSpec& spec, const ScheduleConfig& schedule);

// Gaussian with the target's sample mean and covariance.
GaussianDensity moment_fit(const EmpiricalDistribution& target);

nlohmann::json reconstruction_to_json(const ReconstructionReport& report, const std::string& divergence);
std::string trajectory_to_csv(const ReconstructionReport& report);

}  // namespace fscore

#endif  // FSCORE_RECONSTRUCT_HPP_
