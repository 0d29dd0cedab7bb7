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

#include "fscore/empirical.hpp"

#include <cmath>

#include "fscore/error.hpp"

namespace fscore {

EmpiricalDistribution::EmpiricalDistribution(Eigen::MatrixXd points)
    : points_(std::move(points)) {
  if (points_.rows() == 0 || points_.cols() == 0) throw InvalidArgument("empty sample set");
  if (!points_.allFinite()) throw InvalidArgument("sample set contains non-finite coordinates");
  weights_ = Eigen::VectorXd::Constant(points_.rows(), 1.0 / static_cast<double>(points_.rows()));
}

EmpiricalDistribution::EmpiricalDistribution(Eigen::MatrixXd points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.rows() == 0 || points_.cols() == 0) throw InvalidArgument("empty sample set");
  if (!points_.allFinite()) throw InvalidArgument("sample set contains non-finite coordinates");
  if (weights_.size() != points_.rows()) throw InvalidArgument("one weight per point required");
  if ((weights_.array() <= 0.0).any() || !weights_.allFinite()) {
    throw InvalidArgument("weights must be positive and finite");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-9) throw InvalidArgument("weights must sum to 1");
}

PairedSamples::PairedSamples(Eigen::MatrixXd x, Eigen::MatrixXd y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() != y_.rows()) throw InvalidArgument("paired samples need equal counts of x and y");
  if (x_.rows() == 0 || x_.cols() == 0 || y_.cols() == 0) throw InvalidArgument("empty paired samples");
  if (!x_.allFinite() || !y_.allFinite()) throw InvalidArgument("paired samples contain non-finite values");
}

Eigen::RowVectorXd PairedSamples::concat(Eigen::Index i, Eigen::Index j) const {
  Eigen::RowVectorXd r(x_.cols() + y_.cols());
  r << x_.row(i), y_.row(j);
  return r;
}

}  // namespace fscore
