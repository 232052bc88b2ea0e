#include "aucshift/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "aucshift/logistic.hpp"
#include "aucshift/parallel.hpp"
#include "aucshift/rng.hpp"

namespace aucshift {

const char* to_string(CiKind kind) {
  return kind == CiKind::normal ? "normal" : "percentile";
}

CiKind ci_kind_from_string(const std::string& name) {
  if (name == "normal") return CiKind::normal;
  if (name == "percentile") return CiKind::percentile;
  fail(ErrorCode::BadConfig, "unknown ci kind '" + name + "'");
}

const char* to_string(BenchmarkChoice choice) {
  switch (choice) {
    case BenchmarkChoice::cohort_a: return "a";
    case BenchmarkChoice::cohort_b: return "b";
    case BenchmarkChoice::mixture: return "mixture";
  }
  return "unknown";
}

BenchmarkChoice benchmark_from_string(const std::string& name) {
  if (name == "a" || name == "cohort_a") return BenchmarkChoice::cohort_a;
  if (name == "b" || name == "cohort_b") return BenchmarkChoice::cohort_b;
  if (name == "mixture") return BenchmarkChoice::mixture;
  fail(ErrorCode::BadConfig, "unknown benchmark '" + name + "'");
}

Cohort resample_rows(const Cohort& c, const std::vector<Eigen::Index>& idx) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd x(m, c.p());
  std::optional<Eigen::VectorXd> y, d, w;
  if (c.y) y = Eigen::VectorXd(m);
  if (c.d) d = Eigen::VectorXd(m);
  if (c.design_weight) w = Eigen::VectorXd(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = idx[static_cast<std::size_t>(r)];
    if (i < 0 || i >= c.n()) fail(ErrorCode::IndexOutOfRange, "resample index");
    x.row(r) = c.x.row(i);
    if (y) (*y)(r) = (*c.y)(i);
    if (d) (*d)(r) = (*c.d)(i);
    if (w) (*w)(r) = (*c.design_weight)(i);
  }
  return make_cohort(std::move(x), std::move(y), std::move(d), std::move(w), c.role,
                     c.column_names);
}

namespace {

std::vector<Eigen::Index> draw_indices(Rng& rng, Eigen::Index n) {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
  for (auto& v : out)
    v = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  return out;
}

// Mean/SD over the successful resamples, folded in replicate order so the
// result is independent of how replicates were scheduled.
struct SeriesSummary {
  double se = 0.0;
  std::vector<double> successes;
};

SeriesSummary summarize(const std::vector<double>& vals, const std::vector<char>& ok) {
  SeriesSummary out;
  KahanSum sum;
  for (std::size_t r = 0; r < vals.size(); ++r)
    if (ok[r]) {
      out.successes.push_back(vals[r]);
      sum.add(vals[r]);
    }
  const auto n = static_cast<double>(out.successes.size());
  const double mean = sum.value() / n;
  KahanSum ss;
  for (double v : out.successes) ss.add((v - mean) * (v - mean));
  out.se = std::sqrt(ss.value() / (n - 1.0));
  return out;
}

void attach_ci(EstimateReport& rep, const SeriesSummary& s, CiKind ci) {
  rep.se = s.se;
  if (ci == CiKind::normal) {
    rep.ci_low = rep.point - 1.96 * rep.se;
    rep.ci_high = rep.point + 1.96 * rep.se;
  } else {
    Eigen::VectorXd v(static_cast<Eigen::Index>(s.successes.size()));
    for (std::size_t i = 0; i < s.successes.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = s.successes[i];
    rep.ci_low = quantile_linear(v, 2.5);
    rep.ci_high = quantile_linear(v, 97.5);
  }
  rep.reliable = true;
}

void check_boot_count(long long n_boot) {
  if (n_boot == 1)
    fail(ErrorCode::BadConfig, "n_boot must be 0 (no bootstrap) or at least 2");
}

long long count_failures(const std::vector<char>& ok) {
  long long failed = 0;
  for (char c : ok)
    if (!c) ++failed;
  return failed;
}

void enforce_failure_budget(long long failed, long long n_boot) {
  if (failed * 20 > n_boot)
    fail(ErrorCode::TooManyFailures,
         std::to_string(failed) + " of " + std::to_string(n_boot) +
             " bootstrap resamples failed (over the 5% budget)");
}

}  // namespace

EstimateReport bootstrap_estimate(const EstimatorSpec& spec, const CombinedData& data,
                                  const std::optional<TargetMoments>& summary_target,
                                  long long n_boot, std::uint64_t seed, CiKind ci,
                                  int threads, std::uint64_t replicate_tag) {
  check_boot_count(n_boot);
  EstimateReport rep;
  rep.estimator = to_string(spec.tag);
  rep.seed = seed;
  rep.n_boot = n_boot;
  rep.point = estimate(spec, data, summary_target).value;
  if (n_boot == 0) {
    rep.se = std::numeric_limits<double>::quiet_NaN();
    rep.ci_low = rep.ci_high = rep.se;
    return rep;
  }

  const auto nb = static_cast<std::size_t>(n_boot);
  std::vector<double> vals(nb, 0.0);
  std::vector<char> ok(nb, 0);
  parallel_for(nb, threads, [&](std::size_t r) {
    try {
      Rng rv(derive_seed(seed, replicate_tag, r, stream::boot_validation));
      CombinedData res;
      res.validation = resample_rows(data.validation,
                                     draw_indices(rv, data.validation.n()));
      if (data.rwd) {
        Rng rr(derive_seed(seed, replicate_tag, r, stream::boot_rwd));
        res.rwd = resample_rows(*data.rwd, draw_indices(rr, data.rwd->n()));
      }
      vals[r] = estimate(spec, res, summary_target).value;
      ok[r] = 1;
    } catch (const Error&) {
      ok[r] = 0;
    }
  });

  rep.n_boot_failed = count_failures(ok);
  enforce_failure_budget(rep.n_boot_failed, n_boot);
  attach_ci(rep, summarize(vals, ok), ci);
  return rep;
}

namespace {

FeatureMap compare_map(const EstimatorSpec& spec, const Cohort& a) {
  if (spec.sampling_map) return *spec.sampling_map;
  const int p = static_cast<int>(a.p());
  return spec.map_kind == FeatureMap::Kind::g2_moments_interactions
             ? FeatureMap::g2(p, spec.continuous_mask)
             : FeatureMap::g1(p, spec.continuous_mask);
}

// Pooled target moments combine whole-cohort sums, so the result is exactly
// symmetric in (a, b): each component is one addition of two per-cohort sums.
TargetMoments mixture_moments(const FeatureMap& map, const Cohort& a,
                              const Cohort& b) {
  const Eigen::VectorXd wa = a.weights_or_unit();
  const Eigen::VectorXd wb = b.weights_or_unit();
  const Eigen::VectorXd sa = map.apply_matrix(a.x).transpose() * wa;
  const Eigen::VectorXd sb = map.apply_matrix(b.x).transpose() * wb;
  TargetMoments tm;
  tm.g_tilde = (sa + sb) / (wa.sum() + wb.sum());
  tm.source = MomentSource::rwd_empirical;
  tm.map = map;
  return tm;
}

Cohort as_reference_rows(const Cohort& c) {
  Cohort out = c;
  out.role = Role::rwd;
  return out;
}

Cohort pooled_rows(const Cohort& a, const Cohort& b) {
  Eigen::MatrixXd x(a.n() + b.n(), a.p());
  x.topRows(a.n()) = a.x;
  x.bottomRows(b.n()) = b.x;
  std::optional<Eigen::VectorXd> y, d, w;
  if (a.y && b.y) {
    y = Eigen::VectorXd(a.n() + b.n());
    y->head(a.n()) = *a.y;
    y->tail(b.n()) = *b.y;
  }
  if (a.d && b.d) {
    d = Eigen::VectorXd(a.n() + b.n());
    d->head(a.n()) = *a.d;
    d->tail(b.n()) = *b.d;
  }
  if (a.design_weight || b.design_weight) {
    w = Eigen::VectorXd(a.n() + b.n());
    w->head(a.n()) = a.weights_or_unit();
    w->tail(b.n()) = b.weights_or_unit();
  }
  return make_cohort(std::move(x), std::move(y), std::move(d), std::move(w),
                     Role::rwd, a.column_names);
}

struct BenchmarkPieces {
  TargetMoments tm;
  Cohort reference;  // benchmark population rows, used as patient-level RWD
};

BenchmarkPieces build_benchmark(const FeatureMap& map, const Cohort& a,
                                const Cohort& b, BenchmarkChoice choice) {
  switch (choice) {
    case BenchmarkChoice::cohort_a:
      return {target_moments_from_cohort(map, a), as_reference_rows(a)};
    case BenchmarkChoice::cohort_b:
      return {target_moments_from_cohort(map, b), as_reference_rows(b)};
    case BenchmarkChoice::mixture:
      return {mixture_moments(map, a, b), pooled_rows(a, b)};
  }
  fail(ErrorCode::BadConfig, "unknown benchmark choice");
}

double benchmarked_value(const EstimatorSpec& spec, const Cohort& side,
                         const BenchmarkPieces& pieces) {
  CombinedData data;
  data.validation = side;
  data.validation.role = Role::validation;
  data.rwd = pieces.reference;
  return estimate(spec, data, pieces.tm).value;
}

}  // namespace

ComparisonReport compare(const Cohort& a, const Cohort& b, BenchmarkChoice benchmark,
                         const EstimatorSpec& spec, long long n_boot,
                         std::uint64_t seed, CiKind ci, int threads) {
  check_compatibility(a, b);
  if (!a.y || !a.d || !b.y || !b.d)
    fail(ErrorCode::RequirementUnmet,
         "compare requires biomarker and response in both cohorts");
  check_boot_count(n_boot);

  const FeatureMap map = compare_map(spec, a);
  ComparisonReport rep;
  rep.benchmark = benchmark;
  const BenchmarkPieces base = build_benchmark(map, a, b, benchmark);

  auto init = [&](EstimateReport& r, const std::string& name, double point) {
    r.estimator = name;
    r.point = point;
    r.seed = seed;
    r.n_boot = n_boot;
    r.se = std::numeric_limits<double>::quiet_NaN();
    r.ci_low = r.ci_high = r.se;
  };
  init(rep.auc_a, to_string(spec.tag), benchmarked_value(spec, a, base));
  init(rep.auc_b, to_string(spec.tag), benchmarked_value(spec, b, base));
  init(rep.difference, "difference", rep.auc_b.point - rep.auc_a.point);
  if (n_boot == 0) return rep;

  const auto nb = static_cast<std::size_t>(n_boot);
  std::vector<double> va(nb, 0.0), vb(nb, 0.0), vd(nb, 0.0);
  std::vector<char> ok(nb, 0);
  parallel_for(nb, threads, [&](std::size_t r) {
    try {
      Rng ra(derive_seed(seed, 1, r, stream::boot_validation));
      Rng rb(derive_seed(seed, 2, r, stream::boot_validation));
      const Cohort res_a = resample_rows(a, draw_indices(ra, a.n()));
      const Cohort res_b = resample_rows(b, draw_indices(rb, b.n()));
      const BenchmarkPieces pieces = build_benchmark(map, res_a, res_b, benchmark);
      va[r] = benchmarked_value(spec, res_a, pieces);
      vb[r] = benchmarked_value(spec, res_b, pieces);
      vd[r] = vb[r] - va[r];
      ok[r] = 1;
    } catch (const Error&) {
      ok[r] = 0;
    }
  });

  const long long failed = count_failures(ok);
  enforce_failure_budget(failed, n_boot);
  rep.auc_a.n_boot_failed = rep.auc_b.n_boot_failed = rep.difference.n_boot_failed =
      failed;
  attach_ci(rep.auc_a, summarize(va, ok), ci);
  attach_ci(rep.auc_b, summarize(vb, ok), ci);
  attach_ci(rep.difference, summarize(vd, ok), ci);
  return rep;
}

}  // namespace aucshift
