#include "aucshift/pair_kernel.hpp"

#include <cmath>
#include <vector>

#include "aucshift/error.hpp"
#include "aucshift/outcome_model.hpp"
#include "aucshift/parallel.hpp"

namespace aucshift {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

void check_inputs(const Eigen::VectorXd& a, const Eigen::VectorXd& wa,
                  const Eigen::VectorXd& b, const Eigen::VectorXd& wb, double s) {
  if (a.size() != wa.size() || b.size() != wb.size())
    fail(ErrorCode::DimensionMismatch, "weight length does not match value length");
  if (a.size() == 0 || b.size() == 0)
    fail(ErrorCode::NoPairs, "a pair sum needs at least one value on each side");
  if (!(s > 0.0) || !std::isfinite(s))
    fail(ErrorCode::DegenerateVariance, "pair kernel scale must be positive");
  if (wa.minCoeff() < 0.0 || wb.minCoeff() < 0.0)
    fail(ErrorCode::BadValue, "pair-sum weights must be nonnegative");
}

double kahan_total(const Eigen::VectorXd& v) {
  KahanSum acc;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc.add(v(i));
  return acc.value();
}

}  // namespace

PairSum phi_pair_sum_exact(const Eigen::VectorXd& a, const Eigen::VectorXd& wa,
                           const Eigen::VectorXd& b, const Eigen::VectorXd& wb,
                           double s, int threads) {
  check_inputs(a, wa, b, wb, s);
  const Eigen::Index na = a.size(), nb = b.size();
  const double inv_s = 1.0 / s;

  // Fixed-size row blocks; per-block partials are folded in block order, so
  // the result is identical for every thread count.
  constexpr Eigen::Index kBlock = 128;
  const std::size_t n_blocks =
      static_cast<std::size_t>((na + kBlock - 1) / kBlock);
  std::vector<double> partial(n_blocks, 0.0);

  parallel_for(n_blocks, threads, [&](std::size_t blk) {
    const Eigen::Index lo = static_cast<Eigen::Index>(blk) * kBlock;
    const Eigen::Index hi = std::min(lo + kBlock, na);
    KahanSum block_sum;
    for (Eigen::Index i = lo; i < hi; ++i) {
      if (wa(i) == 0.0) continue;
      KahanSum row;
      for (Eigen::Index j = 0; j < nb; ++j)
        row.add(wb(j) * std_normal_cdf((a(i) - b(j)) * inv_s));
      block_sum.add(wa(i) * row.value());
    }
    partial[blk] = block_sum.value();
  });

  KahanSum total;
  for (double v : partial) total.add(v);

  PairSum out;
  out.numerator = total.value();
  out.denominator = kahan_total(wa) * kahan_total(wb);
  return out;
}

PairSum phi_pair_sum(const Eigen::VectorXd& a, const Eigen::VectorXd& wa,
                     const Eigen::VectorXd& b, const Eigen::VectorXd& wb,
                     double s, const PairSumOptions& opts) {
  check_inputs(a, wa, b, wb, s);
  const Eigen::Index na = a.size(), nb = b.size();
  const std::size_t n_pairs =
      static_cast<std::size_t>(na) * static_cast<std::size_t>(nb);
  const double a_min = a.minCoeff();
  const double a_max = a.maxCoeff();
  const double delta = 0.5 * s;  // anchor spacing; Taylor step <= s/4
  const double span = a_max - a_min;
  const long long want_nodes =
      static_cast<long long>(std::floor(span / delta)) + 1;

  if (!opts.allow_fast || n_pairs < opts.fast_min_pairs ||
      want_nodes > opts.max_nodes || !std::isfinite(span))
    return phi_pair_sum_exact(a, wa, b, wb, s, opts.threads);

  const int n_nodes = static_cast<int>(want_nodes);
  const int order = opts.taylor_order;
  const double inv_s = 1.0 / s;

  // coef[m][k]: k-th Taylor coefficient at anchor m of
  //   h(t) = sum_j wb_j Phi((t - b_j)/s).
  // h^(k)(t) = sum_j wb_j (-1)^(k-1) He_{k-1}(z_j) phi(z_j) / s^k, z=(t-b_j)/s.
  std::vector<std::vector<KahanSum>> coef(
      static_cast<std::size_t>(n_nodes),
      std::vector<KahanSum>(static_cast<std::size_t>(order) + 1));
  std::vector<double> he(static_cast<std::size_t>(order));

  for (int m = 0; m < n_nodes; ++m) {
    const double anchor = a_min + delta * (m + 0.5);
    auto& row = coef[static_cast<std::size_t>(m)];
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double wj = wb(j);
      if (wj == 0.0) continue;
      const double z = (anchor - b(j)) * inv_s;
      row[0].add(wj * std_normal_cdf(z));
      const double phi = kInvSqrt2Pi * std::exp(-0.5 * z * z);
      // Probabilists' Hermite: He_0=1, He_1=z, He_{n+1}=z He_n - n He_{n-1}.
      he[0] = 1.0;
      if (order >= 2) he[1] = z;
      for (int n = 1; n + 1 < order; ++n) he[static_cast<std::size_t>(n) + 1] =
          z * he[static_cast<std::size_t>(n)] - n * he[static_cast<std::size_t>(n) - 1];
      double sign = 1.0;       // (-1)^(k-1)
      double s_pow_fact = s;   // s^k * k!
      for (int k = 1; k <= order; ++k) {
        row[static_cast<std::size_t>(k)].add(
            wj * sign * he[static_cast<std::size_t>(k - 1)] * phi / s_pow_fact);
        sign = -sign;
        s_pow_fact *= s * (k + 1);
      }
    }
  }

  KahanSum total;
  for (Eigen::Index i = 0; i < na; ++i) {
    if (wa(i) == 0.0) continue;
    int m = static_cast<int>((a(i) - a_min) / delta);
    if (m >= n_nodes) m = n_nodes - 1;
    const double dz = a(i) - (a_min + delta * (m + 0.5));
    const auto& row = coef[static_cast<std::size_t>(m)];
    double val = row[static_cast<std::size_t>(order)].value();
    for (int k = order - 1; k >= 0; --k)
      val = val * dz + row[static_cast<std::size_t>(k)].value();
    total.add(wa(i) * val);
  }

  PairSum out;
  out.numerator = total.value();
  out.denominator = kahan_total(wa) * kahan_total(wb);
  return out;
}

}  // namespace aucshift
