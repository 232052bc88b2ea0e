#include "aucshift/outcome_model.hpp"

#include <cmath>

namespace aucshift {

BasisSpec BasisSpec::mains(int p) {
  BasisSpec b;
  for (int i = 0; i < p; ++i) {
    b.terms_d1.push_back(FeatureMap::Term::main(i));
    b.terms_d0.push_back(FeatureMap::Term::main(i));
  }
  return b;
}

namespace {

Eigen::MatrixXd build_design(const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const std::vector<FeatureMap::Term>& terms, int p) {
  const FeatureMap map = FeatureMap::custom(p, terms);
  Eigen::MatrixXd design(x.rows(), 1 + map.q());
  design.col(0).setOnes();
  design.rightCols(map.q()) = map.apply_matrix(x);
  return design;
}

struct GroupFit {
  Eigen::VectorXd beta;
  double sigma = 0.0;
  Eigen::Index n = 0;
  int p = 0;
};

GroupFit fit_group(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const std::vector<FeatureMap::Term>& terms, int p_cov, int d) {
  GroupFit out;
  out.n = x.rows();
  const Eigen::MatrixXd design = build_design(x, terms, p_cov);
  out.p = static_cast<int>(design.cols());
  if (out.n <= out.p)
    fail(ErrorCode::GroupTooSmall,
         "response group D=" + std::to_string(d) + " has n=" + std::to_string(out.n) +
             " <= p=" + std::to_string(out.p) +
             "; the residual scale is undefined");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols())
    fail(ErrorCode::RankDeficientDesign,
         "outcome design for group D=" + std::to_string(d) +
             " is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
             std::to_string(design.cols()) + ")");
  out.beta = qr.solve(y);
  const double rss = (y - design * out.beta).squaredNorm();
  out.sigma = std::sqrt(std::max(0.0, rss) /
                        static_cast<double>(out.n - out.p));
  return out;
}

}  // namespace

OutcomeModelFit fit_outcome(const Cohort& validation, const BasisSpec& basis) {
  if (!validation.y)
    fail(ErrorCode::RequirementUnmet, "outcome model requires biomarker values");
  if (!validation.d)
    fail(ErrorCode::RequirementUnmet, "outcome model requires response indicators");
  const Eigen::Index n = validation.n();
  const int p = static_cast<int>(validation.p());

  std::vector<Eigen::Index> idx1, idx0;
  for (Eigen::Index i = 0; i < n; ++i)
    ((*validation.d)(i) == 1.0 ? idx1 : idx0).push_back(i);
  auto subset = [&](const std::vector<Eigen::Index>& idx, Eigen::MatrixXd& xs,
                    Eigen::VectorXd& ys) {
    xs.resize(static_cast<Eigen::Index>(idx.size()), p);
    ys.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = validation.x.row(idx[r]);
      ys(static_cast<Eigen::Index>(r)) = (*validation.y)(idx[r]);
    }
  };
  Eigen::MatrixXd x1, x0;
  Eigen::VectorXd y1, y0;
  subset(idx1, x1, y1);
  subset(idx0, x0, y0);

  const GroupFit f1 = fit_group(x1, y1, basis.terms_d1, p, 1);
  const GroupFit f0 = fit_group(x0, y0, basis.terms_d0, p, 0);

  OutcomeModelFit fit;
  fit.beta_1 = f1.beta;
  fit.beta_0 = f0.beta;
  fit.sigma_1 = f1.sigma;
  fit.sigma_0 = f0.sigma;
  fit.basis = basis;
  fit.p_covariates = p;
  fit.n_1 = f1.n;
  fit.n_0 = f0.n;
  fit.p_1 = f1.p;
  fit.p_0 = f0.p;
  return fit;
}

Eigen::VectorXd predict_means(const OutcomeModelFit& fit,
                              const Eigen::Ref<const Eigen::MatrixXd>& x, int d) {
  if (d != 0 && d != 1) fail(ErrorCode::BadValue, "group must be 0 or 1");
  const auto& terms = d == 1 ? fit.basis.terms_d1 : fit.basis.terms_d0;
  const auto& beta = d == 1 ? fit.beta_1 : fit.beta_0;
  const Eigen::MatrixXd design = build_design(x, terms, fit.p_covariates);
  if (design.cols() != beta.size())
    fail(ErrorCode::DimensionMismatch, "design width does not match coefficients");
  return design * beta;
}

double predict_mean(const OutcomeModelFit& fit,
                    const Eigen::Ref<const Eigen::VectorXd>& x_row, int d) {
  Eigen::MatrixXd x(1, x_row.size());
  x.row(0) = x_row.transpose();
  return predict_means(fit, x, d)(0);
}

double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

double pair_prob(const OutcomeModelFit& fit,
                 const Eigen::Ref<const Eigen::VectorXd>& x_i,
                 const Eigen::Ref<const Eigen::VectorXd>& x_j) {
  const double var = fit.sigma_0 * fit.sigma_0 + fit.sigma_1 * fit.sigma_1;
  if (!(var > 0.0))
    fail(ErrorCode::DegenerateVariance,
         "both residual scales are zero; the pairwise probability degenerates "
         "to a step function");
  const double delta = predict_mean(fit, x_i, 1) - predict_mean(fit, x_j, 0);
  return std_normal_cdf(delta / std::sqrt(var));
}

}  // namespace aucshift
