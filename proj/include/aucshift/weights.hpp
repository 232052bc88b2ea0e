#pragma once

#include <Eigen/Dense>

#include "aucshift/error.hpp"

namespace aucshift {

// Per-subject nonnegative weights. CW weights are normalized (sum 1); IPSW
// weights are unnormalized — every estimator downstream is a ratio, so scale
// never matters.
struct WeightVector {
  Eigen::VectorXd w;
  bool normalized = false;

  Eigen::Index size() const { return w.size(); }
};

// Pairwise weight w_i * w_j; the U-statistic excludes the diagonal.
inline double pair_weight(const WeightVector& w, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || j < 0 || i >= w.size() || j >= w.size())
    fail(ErrorCode::IndexOutOfRange, "pair index outside 0..n-1");
  if (i == j)
    fail(ErrorCode::IndexOutOfRange, "pairwise weights are defined for i != j only");
  return w.w(i) * w.w(j);
}

}  // namespace aucshift
