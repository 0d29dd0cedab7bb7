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

#include "fscore/lambert_w.hpp"

#include <cmath>
#include <limits>

#include "fscore/error.hpp"

namespace fscore {
namespace {

constexpr double kTol = 1e-12;
constexpr int kMaxIter = 50;

double initial_guess(double x) {
  if (x < 1.0) {
    // W(x) ~ x - x^2 near zero, log1p keeps the guess positive.
    return std::log1p(x);
  }
  const double l1 = std::log(x);
  const double l2 = std::log(l1 > 0.0 ? l1 : 1.0);
  return l1 > 1.0 ? l1 - l2 + l2 / l1 : l1 * 0.5 + 0.5;
}

}  // namespace

double lambert_w0(double x) {
  if (std::isnan(x) || x < 0.0) throw InvalidArgument("lambert_w0: argument must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;
  double w = initial_guess(x);
  for (int i = 0; i < kMaxIter; ++i) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    // Halley step.
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= kTol * (1.0 + std::abs(w))) break;
  }
  return w;
}

double lambert_w0_exp(double a) {
  if (std::isnan(a)) return a;
  if (a < 500.0) return lambert_w0(std::exp(a));
  // Halley on g(w) = w + log w - a, which is well scaled for huge a.
  double w = a - std::log(a);
  for (int i = 0; i < kMaxIter; ++i) {
    const double g = w + std::log(w) - a;
    const double g1 = 1.0 + 1.0 / w;
    const double g2 = -1.0 / (w * w);
    const double step = 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2);
    w -= step;
    if (std::abs(step) <= kTol * w) break;
  }
  return w;
}

}  // namespace fscore
