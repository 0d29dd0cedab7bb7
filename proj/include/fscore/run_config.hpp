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

#ifndef FSCORE_RUN_CONFIG_HPP_
#define FSCORE_RUN_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fscore/critic.hpp"
#include "fscore/mechanism.hpp"
#include "fscore/reconstruct.hpp"
#include "fscore/simlab.hpp"

namespace fscore {

// Everything a CLI run depends on. Loaded from a JSON file and/or flags;
// flags win. The master seed defaults to 42.
struct RunConfig {
  std::string subcommand;
  std::string divergence = "kl";
  std::uint64_t seed = 42;
  std::int64_t n = 1000;
  int repeats = 10;
  std::string world = "exp1";  // preset name; ignored when mean/cov are given
  std::optional<Eigen::Vector2d> mean;
  std::optional<Eigen::Matrix2d> cov;
  double a = 0.0;
  double b = 1.0;
  CriticClassConfig critic;
  OptimizerConfig optimizer;  // optimizer.seed is replaced by the run seed
  std::string output_dir = ".";
  int threads = 1;

  // estimate
  bool mi = false;
  std::string samples;    // estimate: P (or paired x,y with mi); reconstruct: target
  std::string samples_q;  // estimate without mi: Q
  // score
  std::string mechanism = "alg2";
  std::string reports;  // alg1: reports; alg2: paired x,y (group P then group Q)
  std::string truth;    // alg1 ground truth
  // sweep
  std::vector<std::int64_t> n_grid = {128, 512, 2048, 8192};
  // reconstruct
  int rounds = 200;
  std::string init = "standard";  // standard | moments | diagonal | explicit
  std::vector<double> init_mean;
  std::vector<double> init_chol;  // row-major d x d, lower triangle used

  bool operator==(const RunConfig&) const = default;
};

// Strict: unknown keys and wrongly typed values throw InvalidArgument naming the key.
RunConfig run_config_from_json(const nlohmann::json& doc);
// Canonical form: every key, fixed order, so from_json(to_json(c)) == c.
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

// Range checks shared by every subcommand; throws InvalidArgument.
void validate_run_config(const RunConfig& config);

GaussianWorld world_from_config(const RunConfig& config);
MechanismConfig mechanism_from_config(const RunConfig& config);
FitConfig fit_from_config(const RunConfig& config);

}  // namespace fscore

#endif  // FSCORE_RUN_CONFIG_HPP_
