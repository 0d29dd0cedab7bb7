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

// fscore: estimation, scoring, simulation, sweeps and reconstruction from the
// command line. Exit codes: 0 ok, 1 numerical or I/O failure, 2 bad config.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fscore/error.hpp"
#include "fscore/estimator.hpp"
#include "fscore/io.hpp"
#include "fscore/mechanism.hpp"
#include "fscore/reconstruct.hpp"
#include "fscore/rng.hpp"
#include "fscore/run_config.hpp"
#include "fscore/simlab.hpp"

namespace {

using fscore::RunConfig;

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> divergence;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> n;
  std::optional<int> repeats;
  std::optional<std::string> world;
  std::vector<double> mean;
  std::vector<double> cov;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<std::string> critic;
  std::optional<int> max_centers;
  std::optional<double> bandwidth;
  std::vector<int> hidden;
  std::optional<double> weight_cap;
  std::optional<std::string> optimizer;
  std::optional<int> max_iterations;
  std::optional<double> tolerance;
  std::optional<double> ridge;
  std::optional<double> step_size;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool mi = false;
  std::optional<std::string> samples;
  std::optional<std::string> samples_q;
  std::optional<std::string> mechanism;
  std::optional<std::string> reports;
  std::optional<std::string> truth;
  std::vector<std::int64_t> n_grid;
  std::optional<int> rounds;
  std::optional<std::string> init;
  std::vector<double> init_mean;
  std::vector<double> init_chol;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "JSON run config; flags override its values");
  sub->add_option("--divergence", o.divergence, "f-divergence name (default kl)");
  sub->add_option("--seed", o.seed, "master seed (default 42)");
  sub->add_option("--n", o.n, "sample count (default 1000, minimum 8)");
  sub->add_option("--world", o.world, "preset world: exp1, exp2, exp3, independent (default exp1)");
  sub->add_option("--mean", o.mean, "inline world mean: m1,m2")->delimiter(',')->expected(2);
  sub->add_option("--cov", o.cov, "inline world covariance, row-major: s11,s12,s21,s22")->delimiter(',')->expected(4);
  sub->add_option("--critic", o.critic, "critic class: feature_basis or mlp");
  sub->add_option("--max-centers", o.max_centers, "feature critic: maximum number of centers");
  sub->add_option("--bandwidth", o.bandwidth, "feature critic: kernel bandwidth, <= 0 for automatic");
  sub->add_option("--hidden", o.hidden, "mlp critic: hidden widths, e.g. 32,32")->delimiter(',');
  sub->add_option("--weight-cap", o.weight_cap, "mlp critic: parameter box");
  sub->add_option("--optimizer", o.optimizer, "newton or gradient_descent");
  sub->add_option("--max-iterations", o.max_iterations, "critic fit iteration cap");
  sub->add_option("--tolerance", o.tolerance, "critic fit gradient-norm tolerance");
  sub->add_option("--ridge", o.ridge, "feature critic ridge, divided by min(n_P, n_Q)");
  sub->add_option("--step-size", o.step_size, "first line-search step");
  sub->add_option("--out", o.out, "output directory (default .)");
  sub->add_option("--threads", o.threads, "worker threads for repeats (results do not depend on it)");
}

template <typename T>
void set_if(const std::optional<T>& v, T& target) {
  if (v) target = *v;
}

RunConfig resolve(const std::string& subcommand, const Overrides& o) {
  RunConfig c = o.config_path ? fscore::load_run_config(*o.config_path) : RunConfig{};
  c.subcommand = subcommand;
  set_if(o.divergence, c.divergence);
  set_if(o.seed, c.seed);
  set_if(o.n, c.n);
  set_if(o.repeats, c.repeats);
  if (o.world) {
    c.world = *o.world;
    c.mean.reset();
    c.cov.reset();
  }
  if (!o.mean.empty()) c.mean = Eigen::Vector2d(o.mean[0], o.mean[1]);
  if (!o.cov.empty()) {
    Eigen::Matrix2d s;
    s << o.cov[0], o.cov[1], o.cov[2], o.cov[3];
    c.cov = s;
  }
  set_if(o.a, c.a);
  set_if(o.b, c.b);
  if (o.critic) {
    if (*o.critic == "feature_basis") {
      c.critic.kind = fscore::CriticClass::kFeatureBasis;
    } else if (*o.critic == "mlp") {
      c.critic.kind = fscore::CriticClass::kMlp;
    } else {
      throw fscore::InvalidArgument("--critic must be feature_basis or mlp");
    }
  }
  set_if(o.max_centers, c.critic.max_centers);
  set_if(o.bandwidth, c.critic.bandwidth);
  if (!o.hidden.empty()) c.critic.hidden = o.hidden;
  set_if(o.weight_cap, c.critic.weight_cap);
  if (o.optimizer) {
    if (*o.optimizer == "newton") {
      c.optimizer.kind = fscore::OptimizerKind::kNewton;
    } else if (*o.optimizer == "gradient_descent") {
      c.optimizer.kind = fscore::OptimizerKind::kGradientDescent;
    } else {
      throw fscore::InvalidArgument("--optimizer must be newton or gradient_descent");
    }
  }
  set_if(o.max_iterations, c.optimizer.max_iterations);
  set_if(o.tolerance, c.optimizer.tolerance);
  set_if(o.ridge, c.optimizer.ridge);
  set_if(o.step_size, c.optimizer.step_size);
  set_if(o.out, c.output_dir);
  set_if(o.threads, c.threads);
  if (o.mi) c.mi = true;
  set_if(o.samples, c.samples);
  set_if(o.samples_q, c.samples_q);
  set_if(o.mechanism, c.mechanism);
  set_if(o.reports, c.reports);
  set_if(o.truth, c.truth);
  if (!o.n_grid.empty()) c.n_grid = o.n_grid;
  set_if(o.rounds, c.rounds);
  set_if(o.init, c.init);
  if (!o.init_mean.empty()) c.init_mean = o.init_mean;
  if (!o.init_chol.empty()) c.init_chol = o.init_chol;
  c.optimizer.seed = c.seed;
  fscore::validate_run_config(c);
  return c;
}

std::string out_path(const RunConfig& c, const std::string& file) {
  return (std::filesystem::path(c.output_dir) / file).string();
}

// Paired sample file: 2d columns, x then y.
fscore::PairedSamples read_pairs(const std::string& path) {
  const Eigen::MatrixXd m = fscore::read_points_csv(path);
  if (m.cols() % 2 != 0) throw fscore::InvalidArgument(path + ": paired file needs an even number of columns");
  const Eigen::Index d = m.cols() / 2;
  return fscore::PairedSamples(m.leftCols(d), m.rightCols(d));
}

fscore::PairedSamples world_pairs(const RunConfig& c) {
  return fscore::sample_world(fscore::world_from_config(c), c.n, c.seed);
}

// n joint draws (both coordinates) of the world, on their own stream.
Eigen::MatrixXd world_points(const RunConfig& c, std::uint64_t stream) {
  const fscore::GaussianWorld w = fscore::world_from_config(c);
  fscore::Rng rng(fscore::derive_seed({c.seed, stream}));
  return fscore::GaussianDensity(w.mean, w.cov).sample(rng, c.n);
}

void warn_ratio_bound() {
  std::cerr << "fscore: warning: the critic fit stopped at the bounded-ratio limit; the samples violate "
               "the density-ratio assumption and the value is only a lower bound\n";
}

void check_size(Eigen::Index n) {
  if (n < fscore::kMinFitSamples) throw fscore::InvalidArgument("n below minimum 8");
}

int cmd_estimate(const RunConfig& c) {
  const fscore::FDivergenceSpec spec = fscore::get_divergence(c.divergence);
  const fscore::FitConfig fit = fscore::fit_from_config(c);
  nlohmann::json doc;
  double value = 0.0;
  if (c.mi) {
    const fscore::PairedSamples pairs = c.samples.empty() ? world_pairs(c) : read_pairs(c.samples);
    check_size(pairs.size());
    const auto mi = fscore::estimate_mutual_information(spec, pairs, fit);
    doc = fscore::estimate_to_json(mi.estimate);
    doc["n"] = pairs.size();
    value = mi.estimate.value;
  } else {
    Eigen::MatrixXd p, q;
    if (!c.samples.empty()) {
      if (c.samples_q.empty()) throw fscore::InvalidArgument("config: key 'samples_q' is required with 'samples'");
      p = fscore::read_points_csv(c.samples);
      q = fscore::read_points_csv(c.samples_q);
    } else {
      p = world_points(c, 1);
      q = world_points(c, 2);
    }
    check_size(std::min(p.rows(), q.rows()));
    const auto est = fscore::estimate_divergence(spec, fscore::EmpiricalDistribution(p),
                                                 fscore::EmpiricalDistribution(q), fit);
    doc = fscore::estimate_to_json(est);
    value = est.value;
  }
  doc["mutual_information"] = c.mi;
  if (doc.value("ratio_bound_hit", false)) warn_ratio_bound();
  fscore::write_file_atomic(out_path(c, "estimate.json"), doc.dump(2) + "\n");
  std::cout << fscore::format_double(value) << "\n";
  return 0;
}

int cmd_score(const RunConfig& c) {
  const fscore::MechanismConfig mcfg = fscore::mechanism_from_config(c);
  fscore::PaymentSheet sheet = [&] {
    if (c.mechanism == "alg1") {
      if (c.truth.empty()) throw fscore::InvalidArgument("config: key 'truth' is required for alg1");
      const Eigen::MatrixXd truth = fscore::read_points_csv(c.truth);
      const Eigen::MatrixXd reports = c.reports.empty() ? world_points(c, 1) : fscore::read_points_csv(c.reports);
      check_size(std::min(truth.rows(), reports.rows()));
      return fscore::score_with_ground_truth(fscore::EmpiricalDistribution(reports),
                                             fscore::EmpiricalDistribution(truth), mcfg);
    }
    const fscore::PairedSamples pairs = c.reports.empty() ? world_pairs(c) : read_pairs(c.reports);
    check_size(pairs.size());
    return fscore::score_peer_prediction(pairs.x(), pairs.y(), mcfg);
  }();
  if (sheet.estimate.report.ratio_bound_hit) warn_ratio_bound();
  fscore::write_file_atomic(out_path(c, "payments.csv"), fscore::payments_to_csv(sheet));
  std::cout << fscore::format_double(sheet.mean_score('P')) << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& c) {
  fscore::SimOptions opts;
  opts.master_seed = c.seed;
  opts.threads = c.threads;
  const auto rows = fscore::run_score_table({fscore::world_from_config(c)}, fscore::mechanism_from_config(c),
                                            c.repeats, c.n, opts);
  const std::string csv = fscore::score_table_to_csv(rows);
  fscore::write_file_atomic(out_path(c, "score_table.csv"), csv);
  std::cout << csv;
  return 0;
}

int cmd_sweep(const RunConfig& c) {
  fscore::SimOptions opts;
  opts.master_seed = c.seed;
  opts.threads = c.threads;
  std::vector<Eigen::Index> grid(c.n_grid.begin(), c.n_grid.end());
  const auto rows = fscore::run_convergence_sweep(fscore::world_from_config(c), fscore::mechanism_from_config(c),
                                                  grid, c.repeats, opts);
  fscore::write_file_atomic(out_path(c, "sweep.csv"), fscore::sweep_to_csv(rows));
  const std::vector<double> med = fscore::sweep_median_errors(rows);
  std::cout << "n,median_abs_error\n";
  for (std::size_t k = 0; k < grid.size(); ++k) std::cout << grid[k] << ',' << fscore::format_double(med[k]) << "\n";
  return 0;
}

int cmd_reconstruct(const RunConfig& c) {
  const Eigen::MatrixXd target_points = c.samples.empty() ? world_points(c, 3) : fscore::read_points_csv(c.samples);
  const fscore::EmpiricalDistribution target(target_points);
  const Eigen::Index d = target.dimension();
  fscore::GaussianFamily init;
  if (c.init == "moments") {
    init = fscore::GaussianFamily::from_moments(target, c.seed);
  } else if (c.init == "diagonal") {
    init = fscore::GaussianFamily::from_diagonal_moments(target, c.seed);
  } else if (c.init == "explicit") {
    if (static_cast<Eigen::Index>(c.init_mean.size()) != d || static_cast<Eigen::Index>(c.init_chol.size()) != d * d) {
      throw fscore::InvalidArgument("config: keys 'init_mean'/'init_chol' must hold d and d*d numbers");
    }
    init.mean = Eigen::Map<const Eigen::VectorXd>(c.init_mean.data(), d);
    init.chol = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                    c.init_chol.data(), d, d)
                    .triangularView<Eigen::Lower>();
    init.seed = c.seed;
  } else {
    init = fscore::GaussianFamily::standard(d, c.seed);
  }
  fscore::ScheduleConfig schedule;
  schedule.rounds = c.rounds;
  schedule.critic = fscore::fit_from_config(c);
  const auto report = fscore::reconstruct(target, init, fscore::get_divergence(c.divergence), schedule);
  fscore::write_file_atomic(out_path(c, "reconstruction.json"),
                            fscore::reconstruction_to_json(report, c.divergence).dump(2) + "\n");
  fscore::write_file_atomic(out_path(c, "trajectory.csv"), fscore::trajectory_to_csv(report));
  std::cout << "mean " << report.family.mean.transpose().format(Eigen::IOFormat(Eigen::FullPrecision)) << "\n"
            << "oracle_kl " << fscore::format_double(report.oracle_kl) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fscore: variational f-divergence estimation and f-scoring mechanisms"};
  app.require_subcommand(1);

  Overrides o;
  CLI::App* estimate = app.add_subcommand("estimate", "estimate a divergence or f-mutual information");
  add_common(estimate, o);
  estimate->add_flag("--mi", o.mi, "estimate f-mutual information of paired samples");
  estimate->add_option("--samples", o.samples, "CSV of P points (or paired x,y rows with --mi)");
  estimate->add_option("--samples-q", o.samples_q, "CSV of Q points");

  CLI::App* score = app.add_subcommand("score", "pay reports with a scoring mechanism");
  add_common(score, o);
  score->add_option("--mechanism", o.mechanism, "alg1 (ground truth) or alg2 (peer prediction)");
  score->add_option("--reports", o.reports, "alg1: CSV of reports; alg2: paired CSV, group P columns first");
  score->add_option("--truth", o.truth, "alg1: CSV of ground-truth samples");
  score->add_option("--a", o.a, "payment offset (default 0)");
  score->add_option("--b", o.b, "payment scale, > 0 (default 1)");

  CLI::App* simulate = app.add_subcommand("simulate", "score table over reporting strategies");
  add_common(simulate, o);
  simulate->add_option("--repeats", o.repeats, "repeats per strategy, >= 2 (default 10)");
  simulate->add_option("--a", o.a, "payment offset (default 0)");
  simulate->add_option("--b", o.b, "payment scale, > 0 (default 1)");

  CLI::App* sweep = app.add_subcommand("sweep", "estimation error against sample size");
  add_common(sweep, o);
  sweep->add_option("--repeats", o.repeats, "seeds per grid point (default 10)");
  sweep->add_option("--n-grid", o.n_grid, "increasing sample sizes, e.g. 128,512,2048")->delimiter(',');

  CLI::App* recon = app.add_subcommand("reconstruct", "fit a Gaussian to samples by divergence minimization");
  add_common(recon, o);
  recon->add_option("--samples", o.samples, "CSV of target points (default: n draws of the world)");
  recon->add_option("--rounds", o.rounds, "outer rounds (default 200)");
  recon->add_option("--init", o.init, "standard, moments, diagonal or explicit");
  recon->add_option("--init-mean", o.init_mean, "explicit initial mean")->delimiter(',');
  recon->add_option("--init-chol", o.init_chol, "explicit initial Cholesky factor, row-major")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) {
      const RunConfig c = resolve(sub->get_name(), o);
      if (sub == estimate) return cmd_estimate(c);
      if (sub == score) return cmd_score(c);
      if (sub == simulate) return cmd_simulate(c);
      if (sub == sweep) return cmd_sweep(c);
      if (sub == recon) return cmd_reconstruct(c);
    }
  } catch (const fscore::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
