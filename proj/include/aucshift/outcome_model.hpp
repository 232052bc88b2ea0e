#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aucshift/cohort.hpp"
#include "aucshift/feature_map.hpp"

namespace aucshift {

// Regression basis for the biomarker model, one term list per response group;
// an intercept is always prepended.
struct BasisSpec {
  std::vector<FeatureMap::Term> terms_d1;
  std::vector<FeatureMap::Term> terms_d0;

  // Main effects of every covariate in both groups (the conventional default).
  static BasisSpec mains(int p);
};

// Per-group linear fits E[Y|X,D=d] and residual scales.
struct OutcomeModelFit {
  Eigen::VectorXd beta_1, beta_0;  // [intercept, basis terms...]
  double sigma_1 = 0.0, sigma_0 = 0.0;
  BasisSpec basis;
  int p_covariates = 0;
  Eigen::Index n_1 = 0, n_0 = 0;
  int p_1 = 0, p_0 = 0;  // fitted parameter counts including intercept
};

// Ordinary least squares per response group with rank checking;
// sigma_d^2 = RSS_d / (n_d - p_d).
OutcomeModelFit fit_outcome(const Cohort& validation, const BasisSpec& basis);

double predict_mean(const OutcomeModelFit& fit,
                    const Eigen::Ref<const Eigen::VectorXd>& x_row, int d);

Eigen::VectorXd predict_means(const OutcomeModelFit& fit,
                              const Eigen::Ref<const Eigen::MatrixXd>& x, int d);

// Standard normal CDF; absolute error well within 1e-12 on [-8, 8].
double std_normal_cdf(double z);

// Pr(Y_i > Y_j | X_i, X_j, D_i=1, D_j=0) under the normal outcome model:
// Phi((M(x_i,1) - M(x_j,0)) / sqrt(sigma_0^2 + sigma_1^2)).
double pair_prob(const OutcomeModelFit& fit,
                 const Eigen::Ref<const Eigen::VectorXd>& x_i,
                 const Eigen::Ref<const Eigen::VectorXd>& x_j);

}  // namespace aucshift
