#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace aucshift {

struct PairSumOptions {
  bool allow_fast = true;
  // Fast path engages only above this pair count (below it, exact is cheap).
  std::size_t fast_min_pairs = std::size_t{1} << 21;
  int taylor_order = 12;
  // Anchor-count cap; tiny scales fall back to the exact path.
  int max_nodes = 4096;
  int threads = 1;
};

struct PairSum {
  double numerator = 0.0;    // sum_i sum_j wa_i wb_j Phi((a_i - b_j)/s)
  double denominator = 0.0;  // (sum_i wa_i) (sum_j wb_j)
};

// Weighted sum of the normal-CDF kernel over the full a x b grid.
//
// Exact path: blockwise double loop with compensated accumulation, folded in
// a fixed block order so results do not depend on the thread count.
//
// Fast path (large grids): anchors spaced s/2 across the range of a; at each
// anchor the weighted sums of Phi and its first `taylor_order` derivatives
// over b are accumulated via the Hermite recursion, and each a_i is evaluated
// by a Taylor step from its anchor. The truncation remainder is bounded by
// 0.435*sqrt(P!)/(P+1)! * (1/4)^(P+1) < 3e-14 of the total weight at P=12,
// far inside the 1e-12 agreement contract with the exact path.
PairSum phi_pair_sum(const Eigen::VectorXd& a, const Eigen::VectorXd& wa,
                     const Eigen::VectorXd& b, const Eigen::VectorXd& wb,
                     double s, const PairSumOptions& opts = {});

// Exact path only (also the oracle for cross-checking the fast path).
PairSum phi_pair_sum_exact(const Eigen::VectorXd& a, const Eigen::VectorXd& wa,
                           const Eigen::VectorXd& b, const Eigen::VectorXd& wb,
                           double s, int threads = 1);

}  // namespace aucshift
