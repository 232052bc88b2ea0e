#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "aucshift/cohort.hpp"
#include "aucshift/estimators.hpp"
#include "aucshift/feature_map.hpp"

namespace aucshift {

enum class CiKind { normal, percentile };

const char* to_string(CiKind kind);
CiKind ci_kind_from_string(const std::string& name);

// Point estimate plus bootstrap uncertainty for one estimator.
struct EstimateReport {
  std::string estimator;
  double point = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  long long n_boot = 0;
  long long n_boot_failed = 0;
  std::uint64_t seed = 0;
  bool reliable = false;  // true once a bootstrap ran with an acceptable failure rate
};

// Nonparametric bootstrap: validation rows (and RWD rows, when present) are
// resampled independently, and weights, models, and target moments are all
// re-derived inside every resample. A user-supplied covariate summary stays
// fixed across resamples. Resample r draws from streams keyed by
// (seed, replicate_tag, r), so results are reproducible and independent of
// the thread count. Resamples that raise estimator errors are excluded and
// counted; more than 5% failures aborts with TooManyFailures.
EstimateReport bootstrap_estimate(const EstimatorSpec& spec, const CombinedData& data,
                                  const std::optional<TargetMoments>& summary_target,
                                  long long n_boot, std::uint64_t seed, CiKind ci,
                                  int threads, std::uint64_t replicate_tag = 0);

enum class BenchmarkChoice { cohort_a, cohort_b, mixture };

const char* to_string(BenchmarkChoice choice);
BenchmarkChoice benchmark_from_string(const std::string& name);

struct ComparisonReport {
  BenchmarkChoice benchmark = BenchmarkChoice::mixture;
  EstimateReport auc_a;
  EstimateReport auc_b;
  EstimateReport difference;  // point = auc_b.point - auc_a.point
};

// Benchmarks two cohorts against a common covariate target (cohort a, cohort
// b, or their pooled mixture) and reports both calibrated AUCs plus their
// difference. Bootstrap resamples both cohorts jointly per replicate.
// Estimators needing patient-level RWD use the benchmark population's rows.
ComparisonReport compare(const Cohort& a, const Cohort& b, BenchmarkChoice benchmark,
                         const EstimatorSpec& spec, long long n_boot,
                         std::uint64_t seed, CiKind ci, int threads);

// Rows of `c` at `idx` (with repetition) as a new cohort of the same shape.
Cohort resample_rows(const Cohort& c, const std::vector<Eigen::Index>& idx);

}  // namespace aucshift
