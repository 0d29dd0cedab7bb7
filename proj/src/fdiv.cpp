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

#include "fscore/fdiv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fscore/error.hpp"
#include "fscore/lambert_w.hpp"

namespace fscore {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = std::numbers::ln2;

double clamp_raw(double v) { return std::clamp(v, -kRawLimit, kRawLimit); }

double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }
double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double xlogx(double u) { return u > 0.0 ? u * std::log(u) : 0.0; }

// ---- shared squash maps ----------------------------------------------------

double identity(double v) { return v; }
double one(double) { return 1.0; }
double zero(double) { return 0.0; }

double one_minus_exp(double v) { return -std::expm1(v); }
double neg_exp(double v) { return -std::exp(v); }
double log_one_minus(double t) { return t < 1.0 ? clamp_raw(std::log1p(-t)) : -kRawLimit; }

// ---- total variation: f(u) = |u - 1| / 2 -----------------------------------

double tv_f(double u) { return 0.5 * std::abs(u - 1.0); }
double tv_fp(double u) { return u > 1.0 ? 0.5 : (u < 1.0 ? -0.5 : 0.0); }
double tv_squash(double v) { return 0.5 * std::tanh(v); }
double tv_squash_p(double v) {
  const double t = std::tanh(v);
  return 0.5 * (1.0 - t * t);
}
double tv_squash_pp(double v) {
  const double t = std::tanh(v);
  return -t * (1.0 - t * t);
}
double tv_squash_inv(double t) {
  if (t >= 0.5) return kRawLimit;
  if (t <= -0.5) return -kRawLimit;
  return clamp_raw(std::atanh(2.0 * t));
}

// ---- Jensen-Shannon: f(u) = u log u - (u + 1) log((u + 1) / 2) -------------

double js_f(double u) { return xlogx(u) - (u + 1.0) * std::log((u + 1.0) / 2.0); }
double js_fp(double u) { return std::log(2.0 * u / (u + 1.0)); }
double js_conj(double t) { return -std::log(2.0 - std::exp(t)); }
double js_conj_p(double t) {
  const double e = std::exp(t);
  return e / (2.0 - e);
}
double js_conj_pp(double t) {
  const double e = std::exp(t);
  return 2.0 * e / ((2.0 - e) * (2.0 - e));
}
double js_squash(double v) { return kLn2 - softplus(-v); }
double js_squash_p(double v) { return sigmoid(-v); }
double js_squash_pp(double v) { return -sigmoid(v) * sigmoid(-v); }
double js_squash_inv(double t) {
  if (t >= kLn2) return kRawLimit;
  const double z = 2.0 * std::exp(-t) - 1.0;
  return clamp_raw(-std::log(z));
}
double js_cs(double v) { return softplus(v) - kLn2; }
double js_cs_p(double v) { return sigmoid(v); }
double js_cs_pp(double v) { return sigmoid(v) * sigmoid(-v); }

// ---- squared Hellinger: f(u) = (sqrt(u) - 1)^2 -----------------------------

double sh_f(double u) {
  const double s = std::sqrt(u) - 1.0;
  return s * s;
}
double sh_fp(double u) { return 1.0 - 1.0 / std::sqrt(u); }
double sh_conj(double t) { return t / (1.0 - t); }
double sh_conj_p(double t) { return 1.0 / ((1.0 - t) * (1.0 - t)); }
double sh_conj_pp(double t) { return 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t)); }
double sh_cs(double v) { return std::expm1(-v); }
double sh_cs_p(double v) { return -std::exp(-v); }
double sh_cs_pp(double v) { return std::exp(-v); }

// ---- Pearson chi^2: f(u) = (u - 1)^2 ---------------------------------------

double pc_f(double u) { return (u - 1.0) * (u - 1.0); }
double pc_fp(double u) { return 2.0 * (u - 1.0); }
double pc_conj(double t) { return 0.25 * t * t + t; }
double pc_conj_p(double t) { return 0.5 * t + 1.0; }
double pc_conj_pp(double) { return 0.5; }

// ---- Neyman chi^2: f(u) = (1 - u)^2 / u ------------------------------------

double nc_f(double u) { return (1.0 - u) * (1.0 - u) / u; }
double nc_fp(double u) { return 1.0 - 1.0 / (u * u); }
double nc_conj(double t) { return 2.0 - 2.0 * std::sqrt(1.0 - t); }
double nc_conj_p(double t) { return 1.0 / std::sqrt(1.0 - t); }
double nc_conj_pp(double t) { return 0.5 * std::pow(1.0 - t, -1.5); }
double nc_cs(double v) { return 2.0 - 2.0 * std::exp(0.5 * v); }
double nc_cs_p(double v) { return -std::exp(0.5 * v); }
double nc_cs_pp(double v) { return -0.5 * std::exp(0.5 * v); }

// ---- KL: f(u) = u log u ----------------------------------------------------

double kl_f(double u) { return xlogx(u); }
double kl_fp(double u) { return std::log(u) + 1.0; }
double kl_conj(double t) { return std::exp(t - 1.0); }

// ---- reverse KL: f(u) = -log u ---------------------------------------------

double rkl_f(double u) { return -std::log(u); }
double rkl_fp(double u) { return -1.0 / u; }
double rkl_conj(double t) { return -1.0 - std::log(-t); }
double rkl_conj_p(double t) { return -1.0 / t; }
double rkl_conj_pp(double t) { return 1.0 / (t * t); }
double rkl_squash_inv(double t) { return t < 0.0 ? clamp_raw(std::log(-t)) : -kRawLimit; }
double rkl_cs(double v) { return -1.0 - v; }
double rkl_cs_p(double) { return -1.0; }

// ---- Jeffrey: f(u) = (u - 1) log u -----------------------------------------

double jf_f(double u) { return (u - 1.0) * std::log(u); }
double jf_fp(double u) { return std::log(u) + 1.0 - 1.0 / u; }
double jf_conj(double t) {
  const double w = lambert_w0_exp(1.0 - t);
  return w + 1.0 / w + t - 2.0;
}
double jf_conj_p(double t) { return 1.0 / lambert_w0_exp(1.0 - t); }
double jf_conj_pp(double t) {
  const double w = lambert_w0_exp(1.0 - t);
  return 1.0 / (w * (1.0 + w));
}

constexpr std::array<std::string_view, 8> kNames = {
    "total_variation", "jensen_shannon", "squared_hellinger", "pearson_chi2",
    "neyman_chi2",     "kl",             "reverse_kl",        "jeffrey",
};

const Interval kReal{};

FDivergenceSpec make_spec(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::kTotalVariation:
      return {kind, "total_variation", tv_f, tv_fp, identity, one, zero,
              Interval{-0.5, 0.5, true, true}, tv_squash, tv_squash_p, tv_squash_pp,
              tv_squash_inv, tv_squash, tv_squash_p, tv_squash_pp, 1e-3, 1e3, false};
    case DivergenceKind::kJensenShannon:
      return {kind, "jensen_shannon", js_f, js_fp, js_conj, js_conj_p, js_conj_pp,
              Interval{-kInf, kLn2, false, false}, js_squash, js_squash_p, js_squash_pp,
              js_squash_inv, js_cs, js_cs_p, js_cs_pp};
    case DivergenceKind::kSquaredHellinger:
      return {kind, "squared_hellinger", sh_f, sh_fp, sh_conj, sh_conj_p, sh_conj_pp,
              Interval{-kInf, 1.0, false, false}, one_minus_exp, neg_exp, neg_exp,
              log_one_minus, sh_cs, sh_cs_p, sh_cs_pp};
    case DivergenceKind::kPearsonChi2:
      return {kind, "pearson_chi2", pc_f, pc_fp, pc_conj, pc_conj_p, pc_conj_pp, kReal,
              identity, one, zero, identity, pc_conj, pc_conj_p, pc_conj_pp};
    case DivergenceKind::kNeymanChi2:
      return {kind, "neyman_chi2", nc_f, nc_fp, nc_conj, nc_conj_p, nc_conj_pp,
              Interval{-kInf, 1.0, false, false}, one_minus_exp, neg_exp, neg_exp,
              log_one_minus, nc_cs, nc_cs_p, nc_cs_pp};
    case DivergenceKind::kKl:
      return {kind, "kl", kl_f, kl_fp, kl_conj, kl_conj, kl_conj, kReal,
              identity, one, zero, identity, kl_conj, kl_conj, kl_conj};
    case DivergenceKind::kReverseKl:
      return {kind, "reverse_kl", rkl_f, rkl_fp, rkl_conj, rkl_conj_p, rkl_conj_pp,
              Interval{-kInf, 0.0, false, false}, neg_exp, neg_exp, neg_exp, rkl_squash_inv,
              rkl_cs, rkl_cs_p, zero};
    case DivergenceKind::kJeffrey:
      return {kind, "jeffrey", jf_f, jf_fp, jf_conj, jf_conj_p, jf_conj_pp, kReal,
              identity, one, zero, identity, jf_conj, jf_conj_p, jf_conj_pp};
  }
  throw InvalidArgument("unknown divergence kind");
}

constexpr double kGolden = 0.6180339887498949;

}  // namespace

std::span<const std::string_view> divergence_names() { return kNames; }

FDivergenceSpec get_divergence(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return make_spec(static_cast<DivergenceKind>(i));
  }
  std::ostringstream msg;
  msg << "unknown divergence '" << name << "'; valid identifiers:";
  for (auto n : kNames) msg << ' ' << n;
  throw InvalidArgument(msg.str());
}

double divergence_upper_bound(const FDivergenceSpec& spec) {
  return std::max(spec.f(spec.ratio_lo), spec.f(spec.ratio_hi));
}

double numeric_conjugate(const std::function<double(double)>& f, double u,
                         const Interval& search) {
  if (!(search.lo > 0.0) || !std::isfinite(search.hi) || !(search.hi > search.lo)) {
    throw InvalidArgument("numeric_conjugate: search interval must be a finite subset of (0, inf)");
  }
  // Work in s = log v; quasi-concavity survives the monotone change of variable.
  const double s_lo = std::log(search.lo);
  const double s_hi = std::log(search.hi);
  auto objective = [&](double s) {
    const double v = std::exp(s);
    const double fv = f(v);
    if (!std::isfinite(fv)) {
      throw InvalidArgument("numeric_conjugate: f is not finite at v = " + std::to_string(v));
    }
    return u * v - fv;
  };

  constexpr int kGrid = 201;
  const double step = (s_hi - s_lo) / (kGrid - 1);
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double val = objective(s_lo + step * i);
    if (val > best_val) {
      best_val = val;
      best = i;
    }
  }

  double a = s_lo + step * std::max(best - 1, 0);
  double b = s_lo + step * std::min(best + 1, kGrid - 1);
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = objective(d);
    }
  }
  return std::max({best_val, fc, fd, objective(0.5 * (a + b))});
}

// ---- Gaussian density ------------------------------------------------------

GaussianDensity::GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
  const auto d = mean_.size();
  if (d == 0 || cov_.rows() != d || cov_.cols() != d) {
    throw InvalidArgument("gaussian: covariance must be d x d with d = dim(mean) >= 1");
  }
  if (!cov_.allFinite() || !mean_.allFinite()) throw InvalidArgument("gaussian: non-finite parameters");
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cov_.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("gaussian: covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) throw InvalidArgument("gaussian: covariance is not positive definite");
  chol_ = llt.matrixL();
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det);
}

double GaussianDensity::log_pdf(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd z =
      chol_.triangularView<Eigen::Lower>().solve(Eigen::VectorXd(x - mean_));
  return log_norm_ - 0.5 * z.squaredNorm();
}

Eigen::MatrixXd GaussianDensity::sample(Rng& rng, Eigen::Index n) const {
  const auto d = dimension();
  Eigen::MatrixXd z(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  }
  Eigen::MatrixXd x = z * chol_.transpose();
  x.rowwise() += mean_.transpose();
  return x;
}

// ---- quadrature oracle -----------------------------------------------------

QuadratureGrid make_quadrature_grid(const GaussianDensity& p, const GaussianDensity& q,
                                    int points_per_axis) {
  const auto d = p.dimension();
  if (q.dimension() != d) throw InvalidArgument("quadrature: dimension mismatch");
  if (d > 2) throw InvalidArgument("quadrature: dimension too large (d <= 2 supported)");
  if (points_per_axis < 3) throw InvalidArgument("quadrature: need at least 3 points per axis");
  const int m = points_per_axis % 2 == 1 ? points_per_axis : points_per_axis + 1;

  std::vector<Eigen::VectorXd> nodes(d), wts(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double sp = std::sqrt(p.covariance()(k, k));
    const double sq = std::sqrt(q.covariance()(k, k));
    const double lo = std::min(p.mean()(k) - 6.0 * sp, q.mean()(k) - 6.0 * sq);
    const double hi = std::max(p.mean()(k) + 6.0 * sp, q.mean()(k) + 6.0 * sq);
    const double h = (hi - lo) / (m - 1);
    nodes[k] = Eigen::VectorXd::LinSpaced(m, lo, hi);
    wts[k].resize(m);
    for (int i = 0; i < m; ++i) {
      const double c = (i == 0 || i == m - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      wts[k](i) = c * h / 3.0;
    }
  }

  QuadratureGrid grid;
  if (d == 1) {
    grid.points = nodes[0];
    grid.weights = wts[0];
    return grid;
  }
  grid.points.resize(static_cast<Eigen::Index>(m) * m, 2);
  grid.weights.resize(static_cast<Eigen::Index>(m) * m);
  Eigen::Index r = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j, ++r) {
      grid.points(r, 0) = nodes[0](i);
      grid.points(r, 1) = nodes[1](j);
      grid.weights(r) = wts[0](i) * wts[1](j);
    }
  }
  return grid;
}

double gaussian_kl(const GaussianDensity& q, const GaussianDensity& p) {
  const auto d = p.dimension();
  if (q.dimension() != d) throw InvalidArgument("gaussian_kl: dimension mismatch");
  const auto lp = p.cholesky_factor().triangularView<Eigen::Lower>();
  const Eigen::MatrixXd a = lp.solve(q.cholesky_factor());
  const Eigen::VectorXd m = lp.solve(Eigen::VectorXd(p.mean() - q.mean()));
  const double log_det_p = 2.0 * p.cholesky_factor().diagonal().array().log().sum();
  const double log_det_q = 2.0 * q.cholesky_factor().diagonal().array().log().sum();
  return 0.5 * (a.squaredNorm() + m.squaredNorm() - static_cast<double>(d) + log_det_p - log_det_q);
}

double ratio_violation_mass(const FDivergenceSpec& spec, const GaussianDensity& p,
                            const GaussianDensity& q, int points_per_axis) {
  const QuadratureGrid grid = make_quadrature_grid(p, q, points_per_axis);
  const double log_lo = std::log(spec.ratio_lo);
  const double log_hi = std::log(spec.ratio_hi);
  double mass = 0.0;
  for (Eigen::Index i = 0; i < grid.points.rows(); ++i) {
    const Eigen::VectorXd x = grid.points.row(i).transpose();
    const double lp = p.log_pdf(x);
    const double lr = q.log_pdf(x) - lp;
    if (lr < log_lo || lr > log_hi) mass += grid.weights(i) * std::exp(lp);
  }
  return mass;
}

double closed_form_divergence(const FDivergenceSpec& spec, const GaussianDensity& p,
                              const GaussianDensity& q, const OracleOptions& options) {
  if (p.dimension() != q.dimension()) throw InvalidArgument("closed_form_divergence: dimension mismatch");
  if (options.enforce_ratio_bounds && p.dimension() <= 2) {
    const double mass = ratio_violation_mass(spec, p, q, options.points_per_axis);
    if (mass > options.ratio_mass_tolerance) {
      throw InvalidArgument("closed_form_divergence: density ratio leaves [" +
                            std::to_string(spec.ratio_lo) + ", " + std::to_string(spec.ratio_hi) +
                            "] on p-mass " + std::to_string(mass));
    }
  }
  switch (spec.kind) {
    case DivergenceKind::kKl:
      return gaussian_kl(q, p);
    case DivergenceKind::kReverseKl:
      return gaussian_kl(p, q);
    case DivergenceKind::kJeffrey:
      return gaussian_kl(q, p) + gaussian_kl(p, q);
    default:
      break;
  }
  const QuadratureGrid grid = make_quadrature_grid(p, q, options.points_per_axis);
  double total = 0.0;
  for (Eigen::Index i = 0; i < grid.points.rows(); ++i) {
    const Eigen::VectorXd x = grid.points.row(i).transpose();
    const double lp = p.log_pdf(x);
    const double lq = q.log_pdf(x);
    const double pv = std::exp(lp);
    if (pv == 0.0 && std::exp(lq) == 0.0) continue;
    const double term = pv * spec.f(std::exp(lq - lp));
    if (!std::isfinite(term)) throw NumericalError("closed_form_divergence: integrand overflow");
    total += grid.weights(i) * term;
  }
  return total;
}

double gaussian_mutual_information(const Eigen::Matrix2d& cov) {
  const double det = cov.determinant();
  if (!cov.allFinite() || std::abs(cov(0, 1) - cov(1, 0)) > 1e-12 * (1.0 + std::abs(cov(0, 1))) ||
      cov(0, 0) <= 0.0 || det <= 0.0) {
    throw InvalidArgument("gaussian_mutual_information: covariance must be symmetric positive definite");
  }
  return 0.5 * std::log(cov(0, 0) * cov(1, 1) / det);
}

}  // namespace fscore
