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

#ifndef FSCORE_EMPIRICAL_HPP_
#define FSCORE_EMPIRICAL_HPP_

#include <Eigen/Dense>

namespace fscore {

// Finite weighted point set in R^d; one point per row. Weights are positive
// and sum to one (uniform 1/n unless given).
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(Eigen::MatrixXd points);
  EmpiricalDistribution(Eigen::MatrixXd points, Eigen::VectorXd weights);

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dimension() const { return points_.cols(); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  // Weighted mean of a per-point value vector.
  double mean_of(const Eigen::VectorXd& values) const { return weights_.dot(values); }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

// n pairs (x_i, y_i) with x in R^{d1}, y in R^{d2}; pair i is row i of both.
class PairedSamples {
 public:
  PairedSamples(Eigen::MatrixXd x, Eigen::MatrixXd y);

  Eigen::Index size() const { return x_.rows(); }
  Eigen::Index x_dimension() const { return x_.cols(); }
  Eigen::Index y_dimension() const { return y_.cols(); }
  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::MatrixXd& y() const { return y_; }

  // Row i is (x_i, y_j) concatenated.
  Eigen::RowVectorXd concat(Eigen::Index i, Eigen::Index j) const;

 private:
  Eigen::MatrixXd x_;
  Eigen::MatrixXd y_;
};

}  // namespace fscore

#endif  // FSCORE_EMPIRICAL_HPP_
