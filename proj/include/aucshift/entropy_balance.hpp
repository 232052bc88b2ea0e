#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aucshift/feature_map.hpp"
#include "aucshift/weights.hpp"

namespace aucshift {

struct EntropyOptions {
  double tol = 1e-8;        // max-norm moment residual, original units
  int max_iter = 200;
  double lambda_cap = 50.0;  // on standardized multipliers; breach = infeasible
  bool standardize = true;
  std::vector<double>* trace = nullptr;  // per-iteration dual objective (tests)
};

// Solution of: minimize sum q_i log q_i  s.t.  q_i >= 0, sum q_i = 1,
// sum q_i g(X_i) = g_tilde. Weights have the softmax closed form
// q_i = exp(lambda' g(X_i)) / sum_j exp(lambda' g(X_j)).
struct CalibrationSolution {
  Eigen::VectorXd lambda;   // dual multipliers, original feature units
  WeightVector q_weights;   // normalized
  double residual = 0.0;    // max-norm constraint violation at the solution
  int iterations = 0;
};

// Minimizes the convex dual phi(lambda) = log sum_i exp(lambda'(g_i - g_tilde))
// by damped Newton with Armijo backtracking. Features are standardized
// internally and multipliers mapped back.
CalibrationSolution solve_entropy(const Eigen::MatrixXd& g_matrix,
                                  const Eigen::VectorXd& g_tilde,
                                  const EntropyOptions& opts = {});

CalibrationSolution solve_entropy(const Eigen::MatrixXd& g_matrix,
                                  const TargetMoments& target,
                                  const EntropyOptions& opts = {});

}  // namespace aucshift
