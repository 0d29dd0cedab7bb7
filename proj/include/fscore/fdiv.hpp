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

#ifndef FSCORE_FDIV_HPP_
#define FSCORE_FDIV_HPP_

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "fscore/rng.hpp"

namespace fscore {

// Real interval with optionally open or infinite ends.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }
};

using ScalarFn = double (*)(double);

enum class DivergenceKind {
  kTotalVariation,
  kJensenShannon,
  kSquaredHellinger,
  kPearsonChi2,
  kNeymanChi2,
  kKl,
  kReverseKl,
  kJeffrey,
};

// One row of the divergence registry. All members are pure functions; the
// struct is immutable once built and freely shareable.
//
// Convention: D_f(q || p) = E_p[f(q/p)], so f = u log u gives KL(q || p).
// The critic objective only ever sees f^dag(squash(v)) and -squash(v) of a raw
// value v, so those compositions are stored in closed form (conj_of_squash*)
// for numerical stability near the edges of conj_domain.
struct FDivergenceSpec {
  DivergenceKind kind;
  std::string_view name;

  ScalarFn f;
  ScalarFn f_prime;
  ScalarFn f_conj;
  ScalarFn f_conj_prime;
  ScalarFn f_conj_second;
  Interval conj_domain;

  ScalarFn squash;
  ScalarFn squash_prime;
  ScalarFn squash_second;
  ScalarFn squash_inverse;  // saturates to +-kRawLimit at the edges

  ScalarFn conj_of_squash;
  ScalarFn conj_of_squash_prime;
  ScalarFn conj_of_squash_second;

  // Assumed density-ratio range (theta_0, theta_1).
  double ratio_lo = 1e-3;
  double ratio_hi = 1e3;

  // False for total variation, whose generator has a kink at 1 and whose
  // conjugate is linear; f_prime then returns a subgradient.
  bool differentiable = true;
};

inline constexpr double kRawLimit = 50.0;

// Lowercase identifiers accepted by get_divergence, in registry order.
std::span<const std::string_view> divergence_names();

// Throws InvalidArgument listing the valid identifiers for unknown names.
FDivergenceSpec get_divergence(std::string_view name);

// Largest D_f(q||p) possible when ratio_lo <= q/p <= ratio_hi: f is convex,
// so f(q/p) never exceeds max(f(ratio_lo), f(ratio_hi)).
double divergence_upper_bound(const FDivergenceSpec& spec);

// max_{v in search} (u v - f(v)) by a log-spaced grid scan followed by
// golden-section refinement. search must lie in (0, inf) with finite ends.
double numeric_conjugate(const std::function<double(double)>& f, double u,
                         const Interval& search);

// Multivariate normal density.
class GaussianDensity {
 public:
  GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  Eigen::Index dimension() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }

  double log_pdf(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double pdf(const Eigen::Ref<const Eigen::VectorXd>& x) const { return std::exp(log_pdf(x)); }

  // n x d matrix of draws, mean + L z.
  Eigen::MatrixXd sample(Rng& rng, Eigen::Index n) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  double log_norm_ = 0.0;
};

using AnalyticDensity = GaussianDensity;

// Tensor-product Simpson grid covering mean +- 6 sd of both densities on
// every axis. Only d <= 2.
struct QuadratureGrid {
  Eigen::MatrixXd points;   // N x d
  Eigen::VectorXd weights;  // N
};

QuadratureGrid make_quadrature_grid(const GaussianDensity& p, const GaussianDensity& q,
                                    int points_per_axis = 401);

struct OracleOptions {
  int points_per_axis = 401;
  // When true, throw InvalidArgument if the p-mass where q/p leaves the
  // spec's ratio bounds exceeds ratio_mass_tolerance.
  bool enforce_ratio_bounds = false;
  double ratio_mass_tolerance = 1e-3;
};

// Population D_f(q || p) = E_p[f(q/p)]. Closed forms for kl, reverse_kl and
// jeffrey; tensor-grid quadrature (d <= 2) for everything else.
double closed_form_divergence(const FDivergenceSpec& spec, const GaussianDensity& p,
                              const GaussianDensity& q, const OracleOptions& options = {});

// p-mass of the region where q/p falls outside [ratio_lo, ratio_hi] (d <= 2).
double ratio_violation_mass(const FDivergenceSpec& spec, const GaussianDensity& p,
                            const GaussianDensity& q, int points_per_axis = 401);

// KL(q || p) between Gaussians.
double gaussian_kl(const GaussianDensity& q, const GaussianDensity& p);

// Mutual information (nats) between the coordinates of a bivariate normal.
double gaussian_mutual_information(const Eigen::Matrix2d& covariance);

}  // namespace fscore

#endif  // FSCORE_FDIV_HPP_
