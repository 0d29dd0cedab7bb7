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

#ifndef FSCORE_SIMLAB_HPP_
#define FSCORE_SIMLAB_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fscore/empirical.hpp"
#include "fscore/mechanism.hpp"

namespace fscore {

// Bivariate Gaussian world; coordinate 0 feeds the x-stream, 1 the y-stream.
struct GaussianWorld {
  std::string name = "custom";
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  std::uint64_t seed = 42;
};

// exp1, exp2, exp3: the three printed synthetic worlds. independent: N(0, I).
GaussianWorld world_preset(const std::string& name);
std::vector<std::string> world_preset_names();

// n pairs drawn with world.seed (or an explicit seed). Throws on non-PD cov.
PairedSamples sample_world(const GaussianWorld& world, Eigen::Index n);
PairedSamples sample_world(const GaussianWorld& world, Eigen::Index n, std::uint64_t seed);

// Population f-mutual information of the world (joint vs product of marginals).
double world_mutual_information(const GaussianWorld& world, const FDivergenceSpec& spec);

enum class StrategyKind { kTruthful, kRandomShift, kRandomReport };

struct ReportStrategy {
  StrategyKind kind = StrategyKind::kTruthful;
  double lo = 0.0;  // random_shift: noise ~ U(lo, hi) per entry
  double hi = 3.0;
  double scale_mult = 2.0;  // random_report: fresh U(0, scale_mult * sigma) per coordinate
  std::uint64_t seed = 0;

  std::string name() const;
};

// The three strategies of the score table, in table order.
std::vector<ReportStrategy> default_strategies();

// sigma for random_report is the per-coordinate sample std of `samples`.
Eigen::MatrixXd apply_strategy(const ReportStrategy& strategy, const Eigen::MatrixXd& samples);

struct ExperimentResult {
  std::string world;
  std::string strategy;
  double mean = 0.0;  // mean over repeats of the group-P mean score
  double std = 0.0;   // sample std over repeats
  double oracle = 0.0;
  int repeats = 0;
  Eigen::Index n = 0;
  std::vector<double> per_repeat;
};

struct SimOptions {
  std::uint64_t master_seed = 42;
  int threads = 1;  // repeats run concurrently when > 1; results do not depend on it
};

// Peer-prediction score table: for every world, strategy and repeat, scores
// (strategy(x-stream), truthful y-stream). The same world draw is shared by
// all strategies of a repeat.
std::vector<ExperimentResult> run_score_table(const std::vector<GaussianWorld>& worlds,
                                              const MechanismConfig& cfg, int repeats, Eigen::Index n,
                                              const SimOptions& options = {});
std::string score_table_to_csv(const std::vector<ExperimentResult>& rows);

struct SweepRow {
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double oracle = 0.0;
  double abs_error = 0.0;
};

// MI estimates of the world at every grid size and repeat.
std::vector<SweepRow> run_convergence_sweep(const GaussianWorld& world, const MechanismConfig& cfg,
                                            const std::vector<Eigen::Index>& n_grid, int repeats,
                                            const SimOptions& options = {});
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
// Median abs_error per grid size, in grid order.
std::vector<double> sweep_median_errors(const std::vector<SweepRow>& rows);

// Truthful vs deviating score of the same agent, per repeat.
struct DeviationResult {
  MechanismKind mechanism = MechanismKind::kGroundTruth;
  std::string strategy;
  std::vector<double> truthful;
  std::vector<double> deviating;

  int wins() const;  // repeats where truthful > deviating
};

// Ground truth: one agent reports n samples of the world (both coordinates),
// scored against an independent truth draw; deviations transform the whole
// report. Peer prediction: one agent in group P changes its single report,
// everyone else stays truthful; the critic is refitted on the deviated data.
std::vector<DeviationResult> run_deviation_check(const GaussianWorld& world, const MechanismConfig& cfg,
                                                 MechanismKind mechanism, int repeats, Eigen::Index n,
                                                 const SimOptions& options = {});

double median(std::vector<double> values);

}  // namespace fscore

#endif  // FSCORE_SIMLAB_HPP_
