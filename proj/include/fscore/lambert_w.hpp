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

#ifndef FSCORE_LAMBERT_W_HPP_
#define FSCORE_LAMBERT_W_HPP_

namespace fscore {

// Principal branch W0(x) for x >= 0, by Halley iteration from a log-based
// starting point (tolerance 1e-12 relative, at most 50 iterations).
double lambert_w0(double x);

// W0(exp(a)) evaluated without forming exp(a), so it stays finite for any a.
// Solves w + log(w) = a.
double lambert_w0_exp(double a);

}  // namespace fscore

#endif  // FSCORE_LAMBERT_W_HPP_
