#pragma once

#include <Eigen/Dense>
#include <optional>

#include "aucshift/feature_map.hpp"
#include "aucshift/weights.hpp"

namespace aucshift {

struct LogisticOptions {
  double dev_tol = 1e-10;   // |deviance change| convergence
  double grad_tol = 1e-8;   // max-norm score convergence
  int max_iter = 50;
  double coef_cap = 30.0;   // on standardized coefficients; breach = separation
  bool standardize = true;  // scale-only; exactly back-transformed
};

// Logistic sampling-score model Pr(S=1|X). alpha aligns with the design
// columns handed to fit_logistic (intercept first by convention).
struct SamplingFit {
  Eigen::VectorXd alpha;
  bool converged = false;
  double deviance = 0.0;
  std::optional<FeatureMap> feature_map;  // design basis when built from a map
};

// Maximum likelihood by iteratively reweighted least squares. The design must
// already contain its intercept column.
SamplingFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& s,
                         const LogisticOptions& opts = {});

// Stacks validation (S=1) over RWD (S=0), builds [1, g(x)] from the map, fits.
SamplingFit fit_sampling_model(const Eigen::MatrixXd& validation_x,
                               const Eigen::MatrixXd& rwd_x, const FeatureMap& map,
                               const LogisticOptions& opts = {});

// Inverse-probability weights 1/pi(X) for validation rows, unnormalized
// (weighted estimators are ratios, so scale cancels).
WeightVector ipsw_weights(const SamplingFit& fit, const Eigen::MatrixXd& validation_x);

// Weights against an explicit design matrix (no feature map required).
WeightVector ipsw_weights_from_design(const SamplingFit& fit,
                                      const Eigen::MatrixXd& design);

// Linear-interpolation (type-7) empirical quantile of the values.
double quantile_linear(Eigen::VectorXd values, double pct);

// Clamps weights to the [lower_pct, upper_pct] empirical quantiles, then
// rescales to sum to one.
WeightVector truncate_normalize(const WeightVector& w, double lower_pct,
                                double upper_pct);

}  // namespace aucshift
