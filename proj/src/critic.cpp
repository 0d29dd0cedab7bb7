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

#include "fscore/critic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fscore/error.hpp"
#include "fscore/rng.hpp"

namespace fscore {
namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::VectorXd apply(ScalarFn fn, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = fn(v(i));
  return out;
}

void check_dimension(Eigen::Index expected, Eigen::Index got) {
  if (expected != got) {
    throw InvalidArgument("dimension mismatch: critic expects " + std::to_string(expected) +
                          ", got " + std::to_string(got));
  }
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& shift,
                            const Eigen::RowVectorXd& scale) {
  return (x.rowwise() - shift).array().rowwise() / scale.array();
}

}  // namespace

// ---- FeatureBasisCritic ----------------------------------------------------

Eigen::MatrixXd FeatureBasisCritic::features(const Eigen::MatrixXd& x) const {
  check_dimension(dimension(), x.cols());
  const Eigen::Index n = x.rows();
  const Eigen::Index m = num_centers();
  const Eigen::MatrixXd xs = standardize(x, shift, scale);
  const Eigen::VectorXd xn = xs.rowwise().squaredNorm();
  const Eigen::RowVectorXd cn = centers.rowwise().squaredNorm().transpose();
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);

  Eigen::MatrixXd phi(n, m + 1);
  phi.leftCols(m).noalias() = xs * centers.transpose();
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d2 = std::max(xn(i) + cn(k) - 2.0 * phi(i, k), 0.0);
      phi(i, k) = std::exp(-d2 * inv);
    }
  }
  phi.col(m).setOnes();
  return phi;
}

Eigen::MatrixXd FeatureBasisCritic::raw_input_gradient(const Eigen::MatrixXd& x) const {
  const Eigen::Index m = num_centers();
  const Eigen::MatrixXd phi = features(x);
  const Eigen::MatrixXd xs = standardize(x, shift, scale);
  const Eigen::VectorXd wk = weights.head(m);
  const Eigen::VectorXd s = phi.leftCols(m) * wk;
  const Eigen::MatrixXd wc = wk.asDiagonal() * centers;
  Eigen::MatrixXd g = phi.leftCols(m) * wc;
  g = (g - (xs.array().colwise() * s.array()).matrix()) / (bandwidth * bandwidth);
  return g.array().rowwise() / scale.array();
}

// ---- MlpCritic -------------------------------------------------------------

Eigen::Index MlpCritic::param_count(const std::vector<int>& widths) {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    total += static_cast<Eigen::Index>(widths[l + 1]) * (widths[l] + 1);
  }
  return total;
}

namespace {

struct MlpForward {
  std::vector<Eigen::MatrixXd> pre;   // Z_l, n x k_l
  std::vector<Eigen::MatrixXd> post;  // A_l (A_0 = x)
};

MlpForward mlp_forward(const MlpCritic& net, const Eigen::MatrixXd& x) {
  MlpForward fw;
  fw.post.push_back(x);
  const double* ptr = net.params.data();
  const std::size_t layers = net.layer_widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = net.layer_widths[l];
    const int out = net.layer_widths[l + 1];
    Eigen::Map<const RowMajorMatrix> w(ptr, out, in);
    Eigen::Map<const Eigen::VectorXd> b(ptr + static_cast<std::ptrdiff_t>(out) * in, out);
    ptr += static_cast<std::ptrdiff_t>(out) * (in + 1);
    Eigen::MatrixXd z = fw.post.back() * w.transpose();
    z.rowwise() += b.transpose();
    fw.pre.push_back(z);
    fw.post.push_back(l + 1 < layers ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
  }
  return fw;
}

// Returns (parameter gradient, input gradient) for upstream d loss / d raw.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> mlp_backward(const MlpCritic& net,
                                                         const MlpForward& fw,
                                                         const Eigen::VectorXd& upstream) {
  const std::size_t layers = net.layer_widths.size() - 1;
  Eigen::VectorXd grad(net.params.size());
  std::vector<std::ptrdiff_t> offsets(layers);
  std::ptrdiff_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::ptrdiff_t>(net.layer_widths[l + 1]) * (net.layer_widths[l] + 1);
  }
  Eigen::MatrixXd delta = upstream;  // n x 1
  for (std::size_t li = layers; li-- > 0;) {
    const int in = net.layer_widths[li];
    const int out = net.layer_widths[li + 1];
    if (li + 1 < layers) {
      delta = delta.cwiseProduct((fw.pre[li].array() > 0.0).cast<double>().matrix());
    }
    Eigen::Map<RowMajorMatrix> gw(grad.data() + offsets[li], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets[li] + static_cast<std::ptrdiff_t>(out) * in, out);
    gw.noalias() = delta.transpose() * fw.post[li];
    gb = delta.colwise().sum().transpose();
    Eigen::Map<const RowMajorMatrix> w(net.params.data() + offsets[li], out, in);
    delta = delta * w;
  }
  return {grad, delta};
}

}  // namespace

Eigen::VectorXd MlpCritic::raw(const Eigen::MatrixXd& x) const {
  check_dimension(dimension(), x.cols());
  return mlp_forward(*this, x).post.back().col(0);
}

Eigen::VectorXd MlpCritic::backprop(const Eigen::MatrixXd& x, const Eigen::VectorXd& upstream) const {
  check_dimension(dimension(), x.cols());
  return mlp_backward(*this, mlp_forward(*this, x), upstream).first;
}

Eigen::MatrixXd MlpCritic::raw_input_gradient(const Eigen::MatrixXd& x) const {
  check_dimension(dimension(), x.cols());
  return mlp_backward(*this, mlp_forward(*this, x), Eigen::VectorXd::Ones(x.rows())).second;
}

// ---- Critic ----------------------------------------------------------------

Critic::Critic(Model model, FDivergenceSpec spec) : model_(std::move(model)), spec_(spec) {
  std::visit(Overloaded{
                 [](const FeatureBasisCritic& c) {
                   if (c.num_centers() < 1) throw InvalidArgument("feature critic needs m >= 1 centers");
                   if (!(c.bandwidth > 0.0)) throw InvalidArgument("feature critic bandwidth must be > 0");
                   if (c.weights.size() != c.num_centers() + 1) {
                     throw InvalidArgument("feature critic needs m + 1 weights");
                   }
                   if (c.shift.size() != c.dimension() || c.scale.size() != c.dimension() ||
                       (c.scale.array() <= 0.0).any()) {
                     throw InvalidArgument("feature critic standardization must be d-dimensional and positive");
                   }
                 },
                 [](const MlpCritic& c) {
                   if (c.layer_widths.size() < 2 || c.layer_widths.back() != 1) {
                     throw InvalidArgument("mlp widths must run from d to 1");
                   }
                   for (int w : c.layer_widths) {
                     if (w <= 0) throw InvalidArgument("mlp widths must be positive");
                   }
                   if (c.params.size() != MlpCritic::param_count(c.layer_widths)) {
                     throw InvalidArgument("mlp parameter count does not match widths");
                   }
                   if (!(c.weight_cap > 0.0)) throw InvalidArgument("mlp weight cap must be > 0");
                 },
                 [](const ExternalCritic& c) {
                   if (!c.raw_fn || c.dim <= 0) throw InvalidArgument("external critic needs a function and d >= 1");
                 },
             },
             model_);
}

std::string Critic::class_tag() const {
  return std::visit(Overloaded{[](const FeatureBasisCritic&) { return std::string("feature_basis"); },
                               [](const MlpCritic&) { return std::string("mlp"); },
                               [](const ExternalCritic&) { return std::string("external"); }},
                    model_);
}

Eigen::Index Critic::dimension() const {
  return std::visit(Overloaded{[](const FeatureBasisCritic& c) { return c.dimension(); },
                               [](const MlpCritic& c) { return c.dimension(); },
                               [](const ExternalCritic& c) { return c.dim; }},
                    model_);
}

Eigen::Index Critic::num_params() const {
  return std::visit(Overloaded{[](const FeatureBasisCritic& c) { return c.weights.size(); },
                               [](const MlpCritic& c) { return c.params.size(); },
                               [](const ExternalCritic&) { return Eigen::Index{0}; }},
                    model_);
}

Eigen::VectorXd Critic::params() const {
  return std::visit(Overloaded{[](const FeatureBasisCritic& c) { return c.weights; },
                               [](const MlpCritic& c) { return c.params; },
                               [](const ExternalCritic&) { return Eigen::VectorXd(); }},
                    model_);
}

void Critic::set_params(const Eigen::VectorXd& params) {
  if (params.size() != num_params()) throw InvalidArgument("set_params: wrong parameter count");
  std::visit(Overloaded{[&](FeatureBasisCritic& c) { c.weights = params; },
                        [&](MlpCritic& c) { c.params = params; },
                        [](ExternalCritic&) {}},
             model_);
}

Eigen::VectorXd Critic::raw(const Eigen::MatrixXd& x) const {
  return std::visit(Overloaded{[&](const FeatureBasisCritic& c) { return c.raw(x); },
                               [&](const MlpCritic& c) { return c.raw(x); },
                               [&](const ExternalCritic& c) {
                                 check_dimension(c.dim, x.cols());
                                 Eigen::VectorXd out(x.rows());
                                 for (Eigen::Index i = 0; i < x.rows(); ++i) {
                                   out(i) = c.raw_fn(x.row(i));
                                 }
                                 return out;
                               }},
                    model_);
}

double Critic::evaluate(const Eigen::RowVectorXd& x) const {
  check_dimension(dimension(), x.size());
  return spec_.squash(raw(Eigen::MatrixXd(x))(0));
}

Eigen::VectorXd Critic::evaluate(const Eigen::MatrixXd& x) const { return apply(spec_.squash, raw(x)); }

Eigen::VectorXd Critic::raw_param_gradient(const Eigen::MatrixXd& x,
                                           const Eigen::VectorXd& upstream) const {
  return std::visit(
      Overloaded{[&](const FeatureBasisCritic& c) -> Eigen::VectorXd {
                   return c.features(x).transpose() * upstream;
                 },
                 [&](const MlpCritic& c) -> Eigen::VectorXd { return c.backprop(x, upstream); },
                 [](const ExternalCritic&) -> Eigen::VectorXd { return Eigen::VectorXd(); }},
      model_);
}

Eigen::MatrixXd Critic::raw_input_gradient(const Eigen::MatrixXd& x) const {
  return std::visit(
      Overloaded{[&](const FeatureBasisCritic& c) { return c.raw_input_gradient(x); },
                 [&](const MlpCritic& c) { return c.raw_input_gradient(x); },
                 [&](const ExternalCritic& c) -> Eigen::MatrixXd {
                   // Central differences; external discriminators carry no derivative.
                   check_dimension(c.dim, x.cols());
                   Eigen::MatrixXd g(x.rows(), x.cols());
                   for (Eigen::Index i = 0; i < x.rows(); ++i) {
                     for (Eigen::Index k = 0; k < x.cols(); ++k) {
                       Eigen::RowVectorXd a = x.row(i), b = x.row(i);
                       const double h = 1e-6 * (1.0 + std::abs(a(k)));
                       a(k) += h;
                       b(k) -= h;
                       g(i, k) = (c.raw_fn(a) - c.raw_fn(b)) / (2.0 * h);
                     }
                   }
                   return g;
                 }},
      model_);
}

// ---- objective and gradient ------------------------------------------------

double objective(const Critic& critic, const EmpiricalDistribution& p,
                 const EmpiricalDistribution& q) {
  check_dimension(critic.dimension(), p.dimension());
  check_dimension(critic.dimension(), q.dimension());
  const auto& spec = critic.divergence();
  const Eigen::VectorXd rp = critic.raw(p.points());
  const Eigen::VectorXd rq = critic.raw(q.points());
  return p.mean_of(apply(spec.conj_of_squash, rp)) - q.mean_of(apply(spec.squash, rq));
}

Eigen::VectorXd gradient(const Critic& critic, const EmpiricalDistribution& p,
                         const EmpiricalDistribution& q) {
  check_dimension(critic.dimension(), p.dimension());
  check_dimension(critic.dimension(), q.dimension());
  const auto& spec = critic.divergence();
  const Eigen::VectorXd rp = critic.raw(p.points());
  const Eigen::VectorXd rq = critic.raw(q.points());
  const Eigen::VectorXd up = p.weights().cwiseProduct(apply(spec.conj_of_squash_prime, rp));
  const Eigen::VectorXd uq = -q.weights().cwiseProduct(apply(spec.squash_prime, rq));
  return critic.raw_param_gradient(p.points(), up) + critic.raw_param_gradient(q.points(), uq);
}

// ---- construction ----------------------------------------------------------

namespace {

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& x, Eigen::Index m, Rng& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> chosen;
  chosen.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (x.rowwise() - x.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<Eigen::Index>(chosen.size()) < m) {
    const double total = d2.sum();
    if (!(total > 0.0)) break;  // fewer distinct points than requested centers
    const double r = rng.uniform() * total;
    double acc = 0.0;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += d2(i);
      if (acc > r && d2(i) > 0.0) {
        pick = i;
        break;
      }
    }
    while (d2(pick) <= 0.0 && pick > 0) --pick;
    chosen.push_back(pick);
    d2 = d2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }
  Eigen::MatrixXd c(static_cast<Eigen::Index>(chosen.size()), x.cols());
  for (std::size_t k = 0; k < chosen.size(); ++k) c.row(static_cast<Eigen::Index>(k)) = x.row(chosen[k]);
  return c;
}

double median_pairwise_distance(const Eigen::MatrixXd& x, Rng& rng) {
  constexpr Eigen::Index kMaxSubsample = 1000;
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (n > kMaxSubsample) {
    rng.shuffle(idx.begin(), idx.end());
    idx.resize(kMaxSubsample);
  }
  std::vector<double> dist;
  dist.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      dist.push_back((x.row(idx[i]) - x.row(idx[j])).norm());
    }
  }
  if (dist.empty()) return 1.0;
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid > 0.0 ? *mid : 1.0;
}

}  // namespace

Critic make_critic(const CriticClassConfig& config, const FDivergenceSpec& spec,
                   const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                   std::uint64_t seed, double init_scale) {
  if (p.dimension() != q.dimension()) throw InvalidArgument("dimension mismatch between P and Q");
  const Eigen::Index d = p.dimension();
  Rng rng(seed);

  if (config.kind == CriticClass::kMlp) {
    if (config.hidden.empty()) throw InvalidArgument("mlp needs at least one hidden layer");
    MlpCritic net;
    net.layer_widths.push_back(static_cast<int>(d));
    for (int h : config.hidden) net.layer_widths.push_back(h);
    net.layer_widths.push_back(1);
    net.weight_cap = config.weight_cap;
    net.params.setZero(MlpCritic::param_count(net.layer_widths));
    std::ptrdiff_t off = 0;
    for (std::size_t l = 0; l + 1 < net.layer_widths.size(); ++l) {
      const int in = net.layer_widths[l];
      const int out = net.layer_widths[l + 1];
      const double limit = std::min(std::sqrt(6.0 / (in + out)), config.weight_cap);
      for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(out) * in; ++k) {
        net.params(off + k) = rng.uniform(-limit, limit);
      }
      off += static_cast<std::ptrdiff_t>(out) * (in + 1);
    }
    return Critic(std::move(net), spec);
  }

  if (config.max_centers < 1) throw InvalidArgument("max_centers must be >= 1");
  Eigen::MatrixXd pooled(p.size() + q.size(), d);
  pooled << p.points(), q.points();
  FeatureBasisCritic c;
  c.shift = pooled.colwise().mean();
  c.scale = ((pooled.rowwise() - c.shift).colwise().squaredNorm() / static_cast<double>(pooled.rows()))
                .cwiseSqrt();
  for (Eigen::Index k = 0; k < d; ++k) {
    if (!(c.scale(k) > 1e-12)) c.scale(k) = 1.0;
  }
  const Eigen::MatrixXd std_pooled = standardize(pooled, c.shift, c.scale);
  const Eigen::Index m = std::min<Eigen::Index>(config.max_centers, std::min(p.size(), q.size()));
  c.centers = kmeans_plus_plus(std_pooled, m, rng);
  c.bandwidth = config.bandwidth > 0.0 ? config.bandwidth : median_pairwise_distance(std_pooled, rng);
  c.weights.setZero(c.num_centers() + 1);
  if (init_scale > 0.0) {
    for (Eigen::Index k = 0; k < c.weights.size(); ++k) c.weights(k) = init_scale * rng.normal();
  }
  return Critic(std::move(c), spec);
}

// ---- optimization ----------------------------------------------------------

double ridge_lambda(const OptimizerConfig& config, const EmpiricalDistribution& p,
                    const EmpiricalDistribution& q) {
  return config.ridge / static_cast<double>(std::min(p.size(), q.size()));
}

namespace {

// Smooth objective over a flat parameter vector. value() may return a
// non-finite number for infeasible trial points.
struct Problem {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;  // empty: first-order only
  std::function<void(Eigen::VectorXd&)> project;                   // empty: unconstrained
  // Values below this mean the samples break the assumed density-ratio range;
  // minimize stops there.
  double floor = -std::numeric_limits<double>::infinity();
};

FitReport minimize(const Problem& prob, Eigen::VectorXd& theta, const OptimizerConfig& cfg) {
  FitReport report;
  report.seed = cfg.seed;
  double f = prob.value(theta);
  if (!std::isfinite(f)) throw NumericalError("non-finite objective at iteration 0");
  report.trace.push_back(f);

  auto projected_norm = [&](const Eigen::VectorXd& g) {
    if (!prob.project) return g.norm();
    Eigen::VectorXd t = theta - g;
    prob.project(t);
    return (theta - t).norm();
  };

  const bool newton = cfg.kind == OptimizerKind::kNewton && static_cast<bool>(prob.hessian);
  double next_step = cfg.step_size;
  Eigen::VectorXd g = prob.gradient(theta);
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if (!g.allFinite()) throw NumericalError("non-finite gradient at iteration " + std::to_string(it));
    const double gnorm = projected_norm(g);
    report.gradient_norm = gnorm;
    if (gnorm < cfg.tolerance) {
      report.converged = true;
      break;
    }

    Eigen::VectorXd dir = -g;
    double alpha = next_step;
    if (newton) {
      Eigen::MatrixXd h = prob.hessian(theta);
      const double mean_diag = std::max(h.diagonal().cwiseAbs().mean(), 1e-300);
      double shift = 0.0;
      for (int attempt = 0; attempt < 40; ++attempt) {
        Eigen::MatrixXd hs = h;
        hs.diagonal().array() += shift;
        Eigen::LLT<Eigen::MatrixXd> llt(hs);
        if (llt.info() == Eigen::Success) {
          Eigen::VectorXd d = llt.solve(-g);
          if (d.allFinite() && g.dot(d) < 0.0) dir = d;
          break;
        }
        shift = shift == 0.0 ? 1e-10 * mean_diag : shift * 10.0;
      }
      alpha = cfg.step_size;
    }

    bool accepted = false;
    Eigen::VectorXd trial;
    double f_trial = f;
    for (int ls = 0; ls < 60; ++ls) {
      trial = theta + alpha * dir;
      if (prob.project) prob.project(trial);
      f_trial = prob.value(trial);
      if (std::isfinite(f_trial) && f_trial <= f + cfg.armijo_c * g.dot(trial - theta)) {
        accepted = true;
        break;
      }
      alpha *= cfg.shrink;
    }
    if (!accepted) break;  // no decrease representable along dir
    theta = trial;
    f = f_trial;
    report.trace.push_back(f);
    if (f < prob.floor) {
      // Past the largest divergence the ratio bounds allow: the samples break
      // the assumption and the dual would run off. Stop and flag it.
      report.ratio_bound_hit = true;
      g = prob.gradient(theta);
      break;
    }
    next_step = newton ? cfg.step_size : std::min(alpha * 2.0, 1e6);
    g = prob.gradient(theta);
  }
  if (!std::isfinite(f)) throw NumericalError("non-finite objective at iteration " + std::to_string(it));
  report.iterations = static_cast<int>(report.trace.size()) - 1;
  report.penalized_objective = f;
  if (!report.converged) report.gradient_norm = projected_norm(g);
  return report;
}

FitReport refine_feature(FeatureBasisCritic& c, const FDivergenceSpec& spec,
                         const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                         const OptimizerConfig& cfg) {
  const Eigen::MatrixXd phi_p = c.features(p.points());
  const Eigen::MatrixXd phi_q = c.features(q.points());
  const Eigen::VectorXd& wp = p.weights();
  const Eigen::VectorXd& wq = q.weights();
  const Eigen::Index k = c.weights.size();
  const double lambda = ridge_lambda(cfg, p, q);
  const bool curved_squash = spec.squash_second != nullptr &&
                             spec.kind != DivergenceKind::kKl &&
                             spec.kind != DivergenceKind::kPearsonChi2 &&
                             spec.kind != DivergenceKind::kJeffrey;

  struct Cache {
    Eigen::VectorXd theta, rp, rq;
  };
  auto cache = std::make_shared<Cache>();
  auto refresh = [&, cache](const Eigen::VectorXd& th) {
    if (cache->theta.size() == th.size() && cache->theta == th) return;
    cache->theta = th;
    cache->rp.noalias() = phi_p * th;
    cache->rq.noalias() = phi_q * th;
  };
  auto penalty = [&](const Eigen::VectorXd& th) { return 0.5 * lambda * th.head(k - 1).squaredNorm(); };

  Problem prob;
  prob.floor = -divergence_upper_bound(spec);
  prob.value = [&, cache](const Eigen::VectorXd& th) {
    refresh(th);
    return wp.dot(apply(spec.conj_of_squash, cache->rp)) - wq.dot(apply(spec.squash, cache->rq)) +
           penalty(th);
  };
  prob.gradient = [&, cache](const Eigen::VectorXd& th) {
    refresh(th);
    Eigen::VectorXd g = phi_p.transpose() * wp.cwiseProduct(apply(spec.conj_of_squash_prime, cache->rp));
    g.noalias() -= phi_q.transpose() * wq.cwiseProduct(apply(spec.squash_prime, cache->rq));
    g.head(k - 1) += lambda * th.head(k - 1);
    return g;
  };
  prob.hessian = [&, cache](const Eigen::VectorXd& th) {
    refresh(th);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, k);
    auto accumulate = [&h](const Eigen::MatrixXd& phi, const Eigen::VectorXd& curv) {
      constexpr Eigen::Index kBlock = 4096;
      for (Eigen::Index s = 0; s < phi.rows(); s += kBlock) {
        const Eigen::Index len = std::min(kBlock, phi.rows() - s);
        const Eigen::MatrixXd scaled = curv.segment(s, len).asDiagonal() * phi.middleRows(s, len);
        h.noalias() += phi.middleRows(s, len).transpose() * scaled;
      }
    };
    accumulate(phi_p, wp.cwiseProduct(apply(spec.conj_of_squash_second, cache->rp)));
    if (curved_squash) accumulate(phi_q, -wq.cwiseProduct(apply(spec.squash_second, cache->rq)));
    h.diagonal().head(k - 1).array() += lambda;
    return h;
  };

  Eigen::VectorXd theta = c.weights;
  FitReport report = minimize(prob, theta, cfg);
  c.weights = theta;
  report.objective = report.penalized_objective - penalty(theta);
  // The ridge can hold the penalized value above the floor while the plain
  // objective is already past it.
  if (report.objective < prob.floor) report.ratio_bound_hit = true;
  return report;
}

}  // namespace

FitReport refine(Critic& critic, const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                 const OptimizerConfig& config) {
  check_dimension(critic.dimension(), p.dimension());
  check_dimension(critic.dimension(), q.dimension());
  if (!(config.shrink > 0.0 && config.shrink < 1.0) || !(config.armijo_c > 0.0 && config.armijo_c < 1.0) ||
      !(config.step_size > 0.0) || config.max_iterations < 0 || !(config.tolerance > 0.0) ||
      config.ridge < 0.0) {
    throw InvalidArgument("invalid optimizer configuration");
  }
  const FDivergenceSpec spec = critic.divergence();
  if (auto* fb = std::get_if<FeatureBasisCritic>(&critic.model())) {
    return refine_feature(*fb, spec, p, q, config);
  }
  if (auto* net = std::get_if<MlpCritic>(&critic.model())) {
    const double cap = net->weight_cap;
    Problem prob;
    prob.floor = -divergence_upper_bound(spec);
    prob.value = [&](const Eigen::VectorXd& th) {
      critic.set_params(th);
      return objective(critic, p, q);
    };
    prob.gradient = [&](const Eigen::VectorXd& th) {
      critic.set_params(th);
      return gradient(critic, p, q);
    };
    prob.project = [cap](Eigen::VectorXd& th) { th = th.cwiseMax(-cap).cwiseMin(cap); };
    Eigen::VectorXd theta = critic.params();
    prob.project(theta);
    OptimizerConfig cfg = config;
    cfg.kind = OptimizerKind::kGradientDescent;
    FitReport report = minimize(prob, theta, cfg);
    critic.set_params(theta);
    report.objective = report.penalized_objective;
    return report;
  }
  throw InvalidArgument("external critics have no trainable parameters");
}

FitResult fit(const FitConfig& config, const FDivergenceSpec& spec, const EmpiricalDistribution& p,
              const EmpiricalDistribution& q) {
  if (p.size() < kMinFitSamples || q.size() < kMinFitSamples) {
    throw InvalidArgument("fit needs at least " + std::to_string(kMinFitSamples) +
                          " samples per side (n below minimum 8)");
  }
  Critic critic = make_critic(config.critic, spec, p, q, config.optimizer.seed, config.optimizer.init_scale);
  FitReport report = refine(critic, p, q, config.optimizer);
  return {std::move(critic), std::move(report)};
}

// ---- JSON ------------------------------------------------------------------

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json critic_to_json(const Critic& critic) {
  nlohmann::json doc;
  doc["class"] = critic.class_tag();
  doc["divergence"] = std::string(critic.divergence().name);
  std::visit(Overloaded{
                 [&](const FeatureBasisCritic& c) {
                   std::vector<std::vector<double>> centers;
                   for (Eigen::Index i = 0; i < c.centers.rows(); ++i) {
                     centers.push_back(to_vec(c.centers.row(i).transpose()));
                   }
                   doc["centers"] = centers;
                   doc["bandwidth"] = c.bandwidth;
                   doc["shift"] = to_vec(c.shift.transpose());
                   doc["scale"] = to_vec(c.scale.transpose());
                   doc["params"] = to_vec(c.weights);
                 },
                 [&](const MlpCritic& c) {
                   doc["layer_widths"] = c.layer_widths;
                   doc["weight_cap"] = c.weight_cap;
                   doc["params"] = to_vec(c.params);
                 },
                 [](const ExternalCritic&) {
                   throw InvalidArgument("external critics cannot be serialized");
                 },
             },
             critic.model());
  return doc;
}

Critic critic_from_json(const nlohmann::json& doc) {
  try {
    const FDivergenceSpec spec = get_divergence(doc.at("divergence").get<std::string>());
    const auto tag = doc.at("class").get<std::string>();
    if (tag == "feature_basis") {
      FeatureBasisCritic c;
      const auto centers = doc.at("centers").get<std::vector<std::vector<double>>>();
      if (centers.empty()) throw InvalidArgument("critic json: no centers");
      const auto d = static_cast<Eigen::Index>(centers.front().size());
      c.centers.resize(static_cast<Eigen::Index>(centers.size()), d);
      for (std::size_t i = 0; i < centers.size(); ++i) {
        if (static_cast<Eigen::Index>(centers[i].size()) != d) throw InvalidArgument("critic json: ragged centers");
        c.centers.row(static_cast<Eigen::Index>(i)) = from_vec(centers[i]).transpose();
      }
      c.bandwidth = doc.at("bandwidth").get<double>();
      c.shift = from_vec(doc.at("shift").get<std::vector<double>>()).transpose();
      c.scale = from_vec(doc.at("scale").get<std::vector<double>>()).transpose();
      c.weights = from_vec(doc.at("params").get<std::vector<double>>());
      return Critic(std::move(c), spec);
    }
    if (tag == "mlp") {
      MlpCritic net;
      net.layer_widths = doc.at("layer_widths").get<std::vector<int>>();
      net.weight_cap = doc.at("weight_cap").get<double>();
      net.params = from_vec(doc.at("params").get<std::vector<double>>());
      return Critic(std::move(net), spec);
    }
    throw InvalidArgument("critic json: unknown class '" + tag + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("critic json: ") + e.what());
  }
}

}  // namespace fscore
