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

#ifndef FSCORE_CRITIC_HPP_
#define FSCORE_CRITIC_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fscore/empirical.hpp"
#include "fscore/fdiv.hpp"

namespace fscore {

// Gaussian radial-basis expansion plus bias, on per-coordinate standardized
// inputs: raw(x) = sum_k w_k exp(-|x~ - c_k|^2 / (2 bw^2)) + w_m,
// x~ = (x - shift) / scale. Centers and bandwidth are in standardized units.
struct FeatureBasisCritic {
  Eigen::MatrixXd centers;  // m x d
  double bandwidth = 1.0;
  Eigen::RowVectorXd shift;
  Eigen::RowVectorXd scale;
  Eigen::VectorXd weights;  // m + 1, bias last

  Eigen::Index dimension() const { return centers.cols(); }
  Eigen::Index num_centers() const { return centers.rows(); }

  // n x (m + 1) design matrix, bias column last.
  Eigen::MatrixXd features(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd raw(const Eigen::MatrixXd& x) const { return features(x) * weights; }
  Eigen::MatrixXd raw_input_gradient(const Eigen::MatrixXd& x) const;
};

// Dense ReLU network d -> k_1 -> ... -> k_L -> 1 with every parameter held in
// [-weight_cap, weight_cap]. Parameters are flat: for each layer, W (out x in,
// row-major) followed by b.
struct MlpCritic {
  std::vector<int> layer_widths;
  Eigen::VectorXd params;
  double weight_cap = 5.0;

  Eigen::Index dimension() const { return layer_widths.front(); }
  static Eigen::Index param_count(const std::vector<int>& widths);

  Eigen::VectorXd raw(const Eigen::MatrixXd& x) const;
  // sum_i upstream_i * d raw(x_i) / d params.
  Eigen::VectorXd backprop(const Eigen::MatrixXd& x, const Eigen::VectorXd& upstream) const;
  Eigen::MatrixXd raw_input_gradient(const Eigen::MatrixXd& x) const;
};

// A fixed scalar discriminator supplied by the caller; no trainable parameters.
struct ExternalCritic {
  std::function<double(const Eigen::RowVectorXd&)> raw_fn;
  Eigen::Index dim = 0;
};

// The variational witness t(x) = squash(raw(x)), tied to one divergence.
class Critic {
 public:
  using Model = std::variant<FeatureBasisCritic, MlpCritic, ExternalCritic>;

  Critic(Model model, FDivergenceSpec spec);

  const FDivergenceSpec& divergence() const { return spec_; }
  const Model& model() const { return model_; }
  Model& model() { return model_; }
  std::string class_tag() const;

  Eigen::Index dimension() const;
  Eigen::Index num_params() const;
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& params);

  Eigen::VectorXd raw(const Eigen::MatrixXd& x) const;
  // squash(raw(x)) for a single point; throws on dimension mismatch.
  double evaluate(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const;

  // sum_i upstream_i * d raw(x_i) / d params.
  Eigen::VectorXd raw_param_gradient(const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& upstream) const;
  // Row i holds d raw(x_i) / d x.
  Eigen::MatrixXd raw_input_gradient(const Eigen::MatrixXd& x) const;

 private:
  Model model_;
  FDivergenceSpec spec_;
};

// E_P[f^dag(t)] - E_Q[t] for the critic's divergence.
double objective(const Critic& critic, const EmpiricalDistribution& p,
                 const EmpiricalDistribution& q);

// Exact gradient of objective() with respect to critic.params().
Eigen::VectorXd gradient(const Critic& critic, const EmpiricalDistribution& p,
                         const EmpiricalDistribution& q);

enum class CriticClass { kFeatureBasis, kMlp };
enum class OptimizerKind { kNewton, kGradientDescent };

struct CriticClassConfig {
  CriticClass kind = CriticClass::kFeatureBasis;
  int max_centers = 128;
  double bandwidth = 0.0;  // <= 0: median pairwise distance of the pooled sample
  std::vector<int> hidden = {32, 32};
  double weight_cap = 5.0;

  bool operator==(const CriticClassConfig&) const = default;
};

struct OptimizerConfig {
  std::uint64_t seed = 42;
  OptimizerKind kind = OptimizerKind::kNewton;
  double step_size = 1.0;  // first trial step of the line search
  int max_iterations = 5000;
  double tolerance = 1e-6;  // exit on gradient norm below this
  double armijo_c = 1e-4;
  double shrink = 0.5;
  // Feature-basis ridge: lambda = ridge / min(n_P, n_Q) on non-bias weights.
  double ridge = 0.3;
  // Std-dev of the seeded initial feature weights (0: start from zero).
  double init_scale = 0.0;

  bool operator==(const OptimizerConfig&) const = default;
};

struct FitConfig {
  CriticClassConfig critic;
  OptimizerConfig optimizer;
};

inline constexpr Eigen::Index kMinFitSamples = 8;

struct FitReport {
  double objective = 0.0;            // unpenalized, at the returned critic
  double penalized_objective = 0.0;  // what the optimizer minimized
  int iterations = 0;
  double gradient_norm = 0.0;  // of the penalized objective
  bool converged = false;
  // The objective passed -max(f(ratio_lo), f(ratio_hi)) (the fit stops there):
  // the samples violate the bounded density-ratio assumption and the value is
  // only a lower bound.
  bool ratio_bound_hit = false;
  std::uint64_t seed = 0;
  std::vector<double> trace;  // penalized objective per iteration, start included
};

struct FitResult {
  Critic critic;
  FitReport report;
};

// Build an unfitted critic for (P, Q): k-means++ centers and bandwidth for the
// feature basis, Glorot-uniform weights for the MLP. Deterministic in seed.
Critic make_critic(const CriticClassConfig& config, const FDivergenceSpec& spec,
                   const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                   std::uint64_t seed, double init_scale = 0.0);

// Minimize the (penalized) objective starting from critic's current
// parameters. Throws NumericalError when the objective turns non-finite.
FitReport refine(Critic& critic, const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                 const OptimizerConfig& config);

// make_critic + refine; requires at least kMinFitSamples points per side.
FitResult fit(const FitConfig& config, const FDivergenceSpec& spec,
              const EmpiricalDistribution& p, const EmpiricalDistribution& q);

// Ridge coefficient used by refine for these sample sizes.
double ridge_lambda(const OptimizerConfig& config, const EmpiricalDistribution& p,
                    const EmpiricalDistribution& q);

nlohmann::json critic_to_json(const Critic& critic);
Critic critic_from_json(const nlohmann::json& doc);

}  // namespace fscore

#endif  // FSCORE_CRITIC_HPP_
