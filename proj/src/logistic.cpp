#include "aucshift/logistic.hpp"

#include <algorithm>
#include <cmath>

namespace aucshift {

namespace {

double expit(double t) {
  if (t >= 0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double binomial_deviance(const Eigen::VectorXd& s, const Eigen::VectorXd& prob) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double p = std::min(1.0 - 1e-12, std::max(1e-12, prob(i)));
    dev += s(i) * std::log(p) + (1.0 - s(i)) * std::log(1.0 - p);
  }
  return -2.0 * dev;
}

}  // namespace

SamplingFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& s,
                         const LogisticOptions& opts) {
  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.cols();
  if (n == 0) fail(ErrorCode::EmptyCohort, "no rows to fit");
  if (s.size() != n)
    fail(ErrorCode::DimensionMismatch, "label length does not match design rows");
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s(i) == 0.0) has0 = true;
    else if (s(i) == 1.0) has1 = true;
    else fail(ErrorCode::BadValue, "labels must be 0 or 1");
  }
  if (!has0 || !has1)
    fail(ErrorCode::DegenerateResponse, "both classes are required to fit the model");

  // Scale-only standardization: constant columns (the intercept) stay as-is,
  // so coefficients map back by a plain division.
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(k);
  Eigen::MatrixXd X = design;
  if (opts.standardize) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double mean = design.col(j).mean();
      const double sd = std::sqrt(
          (design.col(j).array() - mean).square().sum() / static_cast<double>(n));
      if (sd > 1e-12 * (1.0 + std::abs(mean))) {
        scale(j) = sd;
        X.col(j) /= sd;
      }
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd prob(n), wls_w(n), z(n);
  double dev_old = std::numeric_limits<double>::infinity();
  double dev = 0.0;
  bool converged = false;

  for (int iter = 0; iter < opts.max_iter && !converged; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) prob(i) = expit(eta(i));
    dev = binomial_deviance(s, prob);
    const Eigen::VectorXd score = X.transpose() * (s - prob);
    if (std::abs(dev - dev_old) < opts.dev_tol ||
        score.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      converged = true;
      break;
    }
    dev_old = dev;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = std::max(prob(i) * (1.0 - prob(i)), 1e-10);
      wls_w(i) = std::sqrt(w);
      z(i) = eta(i) + (s(i) - prob(i)) / w;
    }
    const Eigen::MatrixXd Xw = wls_w.asDiagonal() * X;
    const Eigen::VectorXd zw = wls_w.cwiseProduct(z);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
    if (qr.rank() < k)
      fail(ErrorCode::SingularDesign,
           "design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
               " of " + std::to_string(k) + ")");
    beta = qr.solve(zw);
    if (!beta.allFinite())
      fail(ErrorCode::NumericalBreakdown, "IRLS produced non-finite coefficients");
    if (beta.lpNorm<Eigen::Infinity>() > opts.coef_cap)
      fail(ErrorCode::SeparationDetected,
           "coefficients diverged beyond the cap — complete or quasi separation");
    eta = X * beta;
  }
  if (!converged)
    fail(ErrorCode::MaxIterations,
         "IRLS did not converge in " + std::to_string(opts.max_iter) + " iterations");
  if (beta.lpNorm<Eigen::Infinity>() > opts.coef_cap)
    fail(ErrorCode::SeparationDetected,
         "converged with runaway coefficients — complete or quasi separation");

  SamplingFit fit;
  fit.alpha = beta.cwiseQuotient(scale);
  fit.converged = true;
  fit.deviance = dev;
  return fit;
}

SamplingFit fit_sampling_model(const Eigen::MatrixXd& validation_x,
                               const Eigen::MatrixXd& rwd_x, const FeatureMap& map,
                               const LogisticOptions& opts) {
  if (validation_x.cols() != rwd_x.cols())
    fail(ErrorCode::SchemaMismatch,
         "validation and RWD covariate widths differ");
  const Eigen::Index n = validation_x.rows();
  const Eigen::Index m = rwd_x.rows();
  Eigen::MatrixXd design(n + m, 1 + map.q());
  design.col(0).setOnes();
  design.block(0, 1, n, map.q()) = map.apply_matrix(validation_x);
  design.block(n, 1, m, map.q()) = map.apply_matrix(rwd_x);
  Eigen::VectorXd s(n + m);
  s.head(n).setOnes();
  s.tail(m).setZero();
  SamplingFit fit = fit_logistic(design, s, opts);
  fit.feature_map = map;
  return fit;
}

WeightVector ipsw_weights_from_design(const SamplingFit& fit,
                                      const Eigen::MatrixXd& design) {
  if (!fit.converged)
    fail(ErrorCode::RequirementUnmet, "sampling fit did not converge");
  if (design.cols() != fit.alpha.size())
    fail(ErrorCode::DimensionMismatch, "design width does not match coefficients");
  WeightVector out;
  out.w.resize(design.rows());
  out.normalized = false;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const double pi = expit(design.row(i).dot(fit.alpha));
    if (!(pi > 0.0) || !std::isfinite(pi))
      fail(ErrorCode::NonFiniteWeight,
           "estimated sampling probability underflowed to zero at row " +
               std::to_string(i));
    const double w = 1.0 / pi;
    if (!std::isfinite(w))
      fail(ErrorCode::NonFiniteWeight, "non-finite inverse-probability weight");
    out.w(i) = w;
  }
  return out;
}

WeightVector ipsw_weights(const SamplingFit& fit, const Eigen::MatrixXd& validation_x) {
  if (!fit.feature_map)
    fail(ErrorCode::RequirementUnmet,
         "sampling fit records no feature map; use ipsw_weights_from_design");
  const FeatureMap& map = *fit.feature_map;
  Eigen::MatrixXd design(validation_x.rows(), 1 + map.q());
  design.col(0).setOnes();
  design.rightCols(map.q()) = map.apply_matrix(validation_x);
  return ipsw_weights_from_design(fit, design);
}

double quantile_linear(Eigen::VectorXd values, double pct) {
  if (values.size() == 0) fail(ErrorCode::EmptyCohort, "quantile of empty vector");
  if (pct < 0.0 || pct > 100.0)
    fail(ErrorCode::BadValue, "percentile must lie in [0,100]");
  std::sort(values.data(), values.data() + values.size());
  const double h = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  if (lo + 1 >= values.size()) return values(values.size() - 1);
  return values(lo) + (h - static_cast<double>(lo)) * (values(lo + 1) - values(lo));
}

WeightVector truncate_normalize(const WeightVector& w, double lower_pct,
                                double upper_pct) {
  if (!(lower_pct >= 0.0 && lower_pct < upper_pct && upper_pct <= 100.0))
    fail(ErrorCode::BadValue, "truncation percentiles must satisfy 0 <= lo < hi <= 100");
  if (w.size() == 0) fail(ErrorCode::EmptyCohort, "no weights to truncate");
  const double lo = quantile_linear(w.w, lower_pct);
  const double hi = quantile_linear(w.w, upper_pct);
  WeightVector out;
  out.w = w.w.cwiseMax(lo).cwiseMin(hi);
  const double total = out.w.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    fail(ErrorCode::NonFiniteWeight, "truncated weights have non-positive total mass");
  out.w /= total;
  out.normalized = true;
  return out;
}

}  // namespace aucshift
