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

#include "fscore/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "fscore/error.hpp"
#include "fscore/io.hpp"
#include "fscore/rng.hpp"

namespace fscore {
namespace {

// Runs body(0..count-1) on up to `threads` workers. Each task writes its own
// result slot, so the outcome is independent of scheduling.
template <typename Body>
void parallel_for(std::size_t count, int threads, Body body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

GaussianDensity joint_density(const GaussianWorld& world) { return GaussianDensity(world.mean, world.cov); }

double sample_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

MechanismConfig with_seed(const MechanismConfig& cfg, std::uint64_t seed) {
  MechanismConfig out = cfg;
  out.seed = seed;
  return out;
}

}  // namespace

GaussianWorld world_preset(const std::string& name) {
  GaussianWorld w;
  w.name = name;
  if (name == "exp1") {
    w.mean << -2.970, 8.977;
    w.cov << 1.279, 4.392, 4.392, 16.187;
  } else if (name == "exp2") {
    w.mean << 6.978, 8.385;
    w.cov << 10.545, 16.178, 16.178, 26.431;
  } else if (name == "exp3") {
    w.mean << -3.831, 2.173;
    w.cov << 9.545, 9.437, 9.437, 10.081;
  } else if (name == "independent") {
    w.mean.setZero();
    w.cov.setIdentity();
  } else {
    std::string names;
    for (const auto& n : world_preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown world '" + name + "' (expected one of: " + names + ")");
  }
  return w;
}

std::vector<std::string> world_preset_names() { return {"exp1", "exp2", "exp3", "independent"}; }

PairedSamples sample_world(const GaussianWorld& world, Eigen::Index n) { return sample_world(world, n, world.seed); }

PairedSamples sample_world(const GaussianWorld& world, Eigen::Index n, std::uint64_t seed) {
  if (n < kMinFitSamples) throw InvalidArgument("sample_world: n below minimum 8");
  const GaussianDensity density = joint_density(world);
  Rng rng(seed);
  const Eigen::MatrixXd xy = density.sample(rng, n);
  return PairedSamples(xy.col(0), xy.col(1));
}

double world_mutual_information(const GaussianWorld& world, const FDivergenceSpec& spec) {
  if (spec.kind == DivergenceKind::kKl) return gaussian_mutual_information(world.cov);
  const Eigen::Matrix2d diag = world.cov.diagonal().asDiagonal();
  return closed_form_divergence(spec, GaussianDensity(world.mean, diag), joint_density(world));
}

std::string ReportStrategy::name() const {
  switch (kind) {
    case StrategyKind::kTruthful: return "truthful";
    case StrategyKind::kRandomShift: return "random_shift";
    case StrategyKind::kRandomReport: return "random_report";
  }
  return "unknown";
}

std::vector<ReportStrategy> default_strategies() {
  ReportStrategy truthful;
  ReportStrategy shift;
  shift.kind = StrategyKind::kRandomShift;
  ReportStrategy report;
  report.kind = StrategyKind::kRandomReport;
  return {truthful, shift, report};
}

Eigen::MatrixXd apply_strategy(const ReportStrategy& strategy, const Eigen::MatrixXd& samples) {
  if (samples.rows() == 0) throw InvalidArgument("apply_strategy: empty sample list");
  Rng rng(strategy.seed);
  Eigen::MatrixXd out = samples;
  switch (strategy.kind) {
    case StrategyKind::kTruthful:
      break;
    case StrategyKind::kRandomShift:
      if (!(strategy.hi >= strategy.lo)) throw InvalidArgument("random_shift: hi must be >= lo");
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += rng.uniform(strategy.lo, strategy.hi);
      }
      break;
    case StrategyKind::kRandomReport: {
      if (!(strategy.scale_mult > 0.0)) throw InvalidArgument("random_report: scale_mult must be > 0");
      const Eigen::RowVectorXd mean = samples.colwise().mean();
      const double denom = static_cast<double>(std::max<Eigen::Index>(1, samples.rows() - 1));
      const Eigen::RowVectorXd sigma =
          ((samples.rowwise() - mean).array().square().colwise().sum() / denom).sqrt();
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = rng.uniform(0.0, strategy.scale_mult * sigma(j));
      }
      break;
    }
  }
  return out;
}

std::vector<ExperimentResult> run_score_table(const std::vector<GaussianWorld>& worlds,
                                              const MechanismConfig& cfg, int repeats, Eigen::Index n,
                                              const SimOptions& options) {
  if (repeats < 2) throw InvalidArgument("repeats must be at least 2");
  if (n < kMinFitSamples) throw InvalidArgument("n below minimum 8");
  if (worlds.empty()) throw InvalidArgument("no worlds given");
  const FDivergenceSpec spec = get_divergence(cfg.divergence);
  const std::vector<ReportStrategy> strategies = default_strategies();
  const std::size_t ns = strategies.size();
  const std::size_t nr = static_cast<std::size_t>(repeats);
  const std::uint64_t master = options.master_seed;

  std::vector<double> scores(worlds.size() * ns * nr);
  parallel_for(scores.size(), options.threads, [&](std::size_t task) {
    const std::size_t w = task / (ns * nr);
    const std::size_t s = (task / nr) % ns;
    const std::size_t r = task % nr;
    const PairedSamples pairs = sample_world(worlds[w], n, derive_seed({master, w, r}));
    ReportStrategy strategy = strategies[s];
    strategy.seed = derive_seed({master, w, s, r, 1});
    const Eigen::MatrixXd reports = apply_strategy(strategy, pairs.x());
    const PaymentSheet sheet =
        score_peer_prediction(reports, pairs.y(), with_seed(cfg, derive_seed({master, w, s, r, 2})));
    scores[task] = sheet.mean_score('P');
  });

  std::vector<ExperimentResult> out;
  for (std::size_t w = 0; w < worlds.size(); ++w) {
    const double oracle = world_mutual_information(worlds[w], spec);
    for (std::size_t s = 0; s < ns; ++s) {
      ExperimentResult res;
      res.world = worlds[w].name;
      res.strategy = strategies[s].name();
      res.oracle = oracle;
      res.repeats = repeats;
      res.n = n;
      const auto first = scores.begin() + static_cast<std::ptrdiff_t>((w * ns + s) * nr);
      res.per_repeat.assign(first, first + static_cast<std::ptrdiff_t>(nr));
      double acc = 0.0;
      for (double v : res.per_repeat) acc += v;
      res.mean = acc / static_cast<double>(nr);
      res.std = sample_std(res.per_repeat);
      out.push_back(std::move(res));
    }
  }
  return out;
}

std::string score_table_to_csv(const std::vector<ExperimentResult>& rows) {
  std::ostringstream out;
  out << "world,strategy,n,repeats,mean,std,oracle\n";
  for (const auto& r : rows) {
    out << r.world << ',' << r.strategy << ',' << r.n << ',' << r.repeats << ',' << format_double(r.mean) << ','
        << format_double(r.std) << ',' << format_double(r.oracle) << '\n';
  }
  return out.str();
}

std::vector<SweepRow> run_convergence_sweep(const GaussianWorld& world, const MechanismConfig& cfg,
                                            const std::vector<Eigen::Index>& n_grid, int repeats,
                                            const SimOptions& options) {
  if (n_grid.empty()) throw InvalidArgument("empty n grid");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < kMinFitSamples) throw InvalidArgument("n below minimum 8");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw InvalidArgument("n grid must be increasing");
  }
  if (repeats < 1) throw InvalidArgument("repeats must be at least 1");
  const FDivergenceSpec spec = get_divergence(cfg.divergence);
  const double oracle = world_mutual_information(world, spec);
  const std::size_t nr = static_cast<std::size_t>(repeats);

  std::vector<SweepRow> rows(n_grid.size() * nr);
  parallel_for(rows.size(), options.threads, [&](std::size_t task) {
    const std::size_t k = task / nr;
    const std::size_t r = task % nr;
    const std::uint64_t seed = derive_seed({options.master_seed, static_cast<std::uint64_t>(n_grid[k]), r});
    const PairedSamples pairs = sample_world(world, n_grid[k], seed);
    FitConfig fit = cfg.fit;
    fit.optimizer.seed = seed;
    const MutualInformationEstimate mi = estimate_mutual_information(spec, pairs, fit);
    rows[task] = SweepRow{n_grid[k], seed, mi.estimate.value, oracle, std::abs(mi.estimate.value - oracle)};
  });
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "n,seed,estimate,oracle,abs_error\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.seed << ',' << format_double(r.estimate) << ',' << format_double(r.oracle) << ','
        << format_double(r.abs_error) << '\n';
  }
  return out.str();
}

std::vector<double> sweep_median_errors(const std::vector<SweepRow>& rows) {
  std::vector<double> out;
  std::size_t k = 0;
  while (k < rows.size()) {
    std::vector<double> errs;
    const Eigen::Index n = rows[k].n;
    for (; k < rows.size() && rows[k].n == n; ++k) errs.push_back(rows[k].abs_error);
    out.push_back(median(errs));
  }
  return out;
}

int DeviationResult::wins() const {
  int count = 0;
  for (std::size_t r = 0; r < truthful.size() && r < deviating.size(); ++r) count += truthful[r] > deviating[r];
  return count;
}

std::vector<DeviationResult> run_deviation_check(const GaussianWorld& world, const MechanismConfig& cfg,
                                                 MechanismKind mechanism, int repeats, Eigen::Index n,
                                                 const SimOptions& options) {
  if (repeats < 2) throw InvalidArgument("repeats must be at least 2");
  if (n < kMinFitSamples) throw InvalidArgument("n below minimum 8");
  const std::vector<ReportStrategy> strategies = default_strategies();
  const std::size_t ns = strategies.size();
  const std::size_t nr = static_cast<std::size_t>(repeats);
  const std::uint64_t master = options.master_seed;
  const GaussianDensity density = joint_density(world);

  // scores[s * nr + r]; strategy 0 is the truthful baseline.
  std::vector<double> scores(ns * nr);
  parallel_for(scores.size(), options.threads, [&](std::size_t task) {
    const std::size_t s = task / nr;
    const std::size_t r = task % nr;
    ReportStrategy strategy = strategies[s];
    strategy.seed = derive_seed({master, s, r, 1});
    const MechanismConfig run_cfg = with_seed(cfg, derive_seed({master, r, 2}));
    if (mechanism == MechanismKind::kGroundTruth) {
      Rng rng(derive_seed({master, r}));
      const Eigen::MatrixXd reports = density.sample(rng, n);
      const Eigen::MatrixXd truth = density.sample(rng, n);
      const PaymentSheet sheet = score_with_ground_truth(EmpiricalDistribution(apply_strategy(strategy, reports)),
                                                         EmpiricalDistribution(truth), run_cfg);
      scores[task] = sheet.mean_score('P');
    } else {
      const PairedSamples pairs = sample_world(world, n, derive_seed({master, r}));
      Rng slot_rng(derive_seed({master, r, 3}));
      const Eigen::Index slot = static_cast<Eigen::Index>(slot_rng.below(static_cast<std::uint64_t>(n)));
      Eigen::MatrixXd reports = pairs.x();
      reports.row(slot) = apply_strategy(strategy, pairs.x()).row(slot);
      const PaymentSheet sheet = score_peer_prediction(reports, pairs.y(), run_cfg);
      scores[task] = sheet.score_of(slot);
    }
  });

  std::vector<DeviationResult> out;
  const std::vector<double> truthful(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(nr));
  for (std::size_t s = 1; s < ns; ++s) {
    DeviationResult res;
    res.mechanism = mechanism;
    res.strategy = strategies[s].name();
    res.truthful = truthful;
    const auto first = scores.begin() + static_cast<std::ptrdiff_t>(s * nr);
    res.deviating.assign(first, first + static_cast<std::ptrdiff_t>(nr));
    out.push_back(std::move(res));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of empty list");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace fscore
