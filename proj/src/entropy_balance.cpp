#include "aucshift/entropy_balance.hpp"

#include <cmath>

namespace aucshift {

namespace {

double log_sum_exp(const Eigen::VectorXd& eta) {
  const double m = eta.maxCoeff();
  return m + std::log((eta.array() - m).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& eta) {
  const double m = eta.maxCoeff();
  Eigen::VectorXd w = (eta.array() - m).exp();
  return w / w.sum();
}

}  // namespace

CalibrationSolution solve_entropy(const Eigen::MatrixXd& g_matrix,
                                  const Eigen::VectorXd& g_tilde,
                                  const EntropyOptions& opts) {
  const Eigen::Index n = g_matrix.rows();
  const Eigen::Index q = g_matrix.cols();
  if (n == 0) fail(ErrorCode::EmptyCohort, "no rows to calibrate");
  if (g_tilde.size() != q)
    fail(ErrorCode::DimensionMismatch, "g_tilde length " + std::to_string(g_tilde.size()) +
                                           " != feature count " + std::to_string(q));
  if (!g_tilde.allFinite())
    fail(ErrorCode::BadValue, "target moments contain non-finite entries");

  // Constant feature columns carry no leverage: drop those whose constraint is
  // already met; any other constant column makes the target unreachable.
  std::vector<Eigen::Index> active;
  std::vector<double> scale;
  for (Eigen::Index k = 0; k < q; ++k) {
    const double mean = g_matrix.col(k).mean();
    const double sd =
        std::sqrt((g_matrix.col(k).array() - mean).square().sum() / static_cast<double>(n));
    if (sd <= 1e-12 * (1.0 + std::abs(mean))) {
      if (std::abs(mean - g_tilde(k)) <= opts.tol) continue;
      fail(ErrorCode::InfeasibleTarget,
           "feature column " + std::to_string(k) +
               " is constant in the sample but its target moment differs");
    }
    active.push_back(k);
    scale.push_back(opts.standardize ? sd : 1.0);
  }

  const Eigen::Index qa = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd C(n, qa);  // standardized features centered at the target
  for (Eigen::Index a = 0; a < qa; ++a)
    C.col(a) = (g_matrix.col(active[static_cast<std::size_t>(a)]).array() -
                g_tilde(active[static_cast<std::size_t>(a)])) /
               scale[static_cast<std::size_t>(a)];

  Eigen::VectorXd lambda_std = Eigen::VectorXd::Zero(qa);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double phi = log_sum_exp(eta);
  if (opts.trace) opts.trace->push_back(phi);

  auto finish = [&](const Eigen::VectorXd& w, int iterations) {
    CalibrationSolution sol;
    sol.lambda = Eigen::VectorXd::Zero(q);
    for (Eigen::Index a = 0; a < qa; ++a)
      sol.lambda(active[static_cast<std::size_t>(a)]) =
          lambda_std(a) / scale[static_cast<std::size_t>(a)];
    sol.q_weights = WeightVector{w, true};
    sol.residual = (g_matrix.transpose() * w - g_tilde).lpNorm<Eigen::Infinity>();
    sol.iterations = iterations;
    return sol;
  };

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd w = softmax(eta);
    const Eigen::VectorXd grad = C.transpose() * w;
    double residual = 0.0;
    for (Eigen::Index a = 0; a < qa; ++a)
      residual = std::max(residual,
                          std::abs(grad(a) * scale[static_cast<std::size_t>(a)]));
    if (residual <= opts.tol) return finish(w, iter);

    Eigen::MatrixXd H = C.transpose() * w.asDiagonal() * C - grad * grad.transpose();
    Eigen::VectorXd step;
    {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        const double ridge = 1e-10 * H.trace() + 1e-300;
        H.diagonal().array() += ridge;
        Eigen::LDLT<Eigen::MatrixXd> ridged(H);
        step = ridged.solve(-grad);
        if (ridged.info() != Eigen::Success || !step.allFinite())
          fail(ErrorCode::NumericalBreakdown,
               "dual Hessian is singular even after ridge fallback");
      }
    }
    double descent = grad.dot(step);
    if (descent >= 0.0) {  // numerically lost direction: fall back to steepest
      step = -grad;
      descent = -grad.squaredNorm();
    }

    const Eigen::VectorXd deta = C * step;
    double t = 1.0;
    bool accepted = false;
    double phi_try = phi;
    Eigen::VectorXd eta_try;
    for (int ls = 0; ls < 60; ++ls) {
      eta_try = eta + t * deta;
      phi_try = log_sum_exp(eta_try);
      if (phi_try <= phi + 1e-4 * t * descent) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Armijo stalled at floating-point resolution.
      if (lambda_std.lpNorm<Eigen::Infinity>() > opts.lambda_cap)
        fail(ErrorCode::InfeasibleTarget,
             "line search stalled with diverging multipliers — target moments "
             "outside the convex hull of the sample features");
      fail(ErrorCode::NumericalBreakdown,
           "line search stalled before reaching tolerance (residual " +
               std::to_string(residual) + ")");
    }
    lambda_std += t * step;
    eta = eta_try;
    phi = phi_try;
    if (opts.trace) opts.trace->push_back(phi);
    if (lambda_std.lpNorm<Eigen::Infinity>() > opts.lambda_cap)
      fail(ErrorCode::InfeasibleTarget,
           "multipliers exceeded the cap — target moments outside the convex "
           "hull of the sample features");
  }
  fail(ErrorCode::MaxIterations,
       "entropy balancing did not converge in " + std::to_string(opts.max_iter) +
           " iterations");
}

CalibrationSolution solve_entropy(const Eigen::MatrixXd& g_matrix,
                                  const TargetMoments& target,
                                  const EntropyOptions& opts) {
  if (g_matrix.cols() != target.map.q())
    fail(ErrorCode::DimensionMismatch,
         "feature matrix width does not match the target moment map");
  return solve_entropy(g_matrix, target.g_tilde, opts);
}

}  // namespace aucshift
