#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "aucshift/cohort.hpp"
#include "aucshift/entropy_balance.hpp"
#include "aucshift/feature_map.hpp"
#include "aucshift/logistic.hpp"
#include "aucshift/outcome_model.hpp"
#include "aucshift/pair_kernel.hpp"
#include "aucshift/weights.hpp"

namespace aucshift {

enum class Ties { strict, half };
enum class EstimatorTag { naive, ipsw, cw, om, om_rwd, acw, aipsw };

const char* to_string(EstimatorTag tag);
EstimatorTag estimator_tag_from_string(const std::string& name);

struct PointEstimate {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  long long effective_pairs = 0;  // pairs with positive product weight
};

// Weighted two-sample U-statistic:
//   sum_{i: d=1} sum_{j: d=0} w_i w_j k(y_i, y_j) / sum w_i w_j,
// k = 1(y_i > y_j), plus 1/2 on ties under the `half` policy. Computed in
// O(n log n) via sorted prefix sums; equals the brute-force double sum.
PointEstimate weighted_auc(const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                           const Eigen::VectorXd& w, Ties ties = Ties::strict);

// Outcome-model estimator over weighted validation pairs (both fitting and
// prediction inside the validation cohort).
PointEstimate om_weighted(const Cohort& validation, const OutcomeModelFit& fit,
                          const Eigen::VectorXd& w,
                          const PairSumOptions& pair_opts = {});

// Outcome-model estimator over RWD pairs: unweighted mean of the pairwise
// probabilities across responder x non-responder pairs of the RWD.
PointEstimate om_rwd(const Cohort& rwd, const OutcomeModelFit& fit,
                     const PairSumOptions& pair_opts = {});

// Augmented calibration weighting: cw - om(CW weights) + om_rwd. The value is
// deliberately not clamped to [0,1]; a clamped copy is surfaced separately.
PointEstimate acw(const CombinedData& data, const CalibrationSolution& cal,
                  const OutcomeModelFit& fit, Ties ties = Ties::strict,
                  const PairSumOptions& pair_opts = {});

// Augmented IPSW: ipsw - om(IPSW weights) + om_rwd.
PointEstimate aipsw(const CombinedData& data, const SamplingFit& sfit,
                    const OutcomeModelFit& fit,
                    std::optional<std::pair<double, double>> truncation = {},
                    Ties ties = Ties::strict, const PairSumOptions& pair_opts = {});

// Everything needed to run one estimator end to end.
struct EstimatorSpec {
  EstimatorTag tag = EstimatorTag::naive;
  FeatureMap::Kind map_kind = FeatureMap::Kind::g1_moments;  // calibration map
  std::vector<bool> continuous_mask;                         // empty = all
  std::optional<BasisSpec> outcome_basis;       // default: main effects
  std::optional<FeatureMap> sampling_map;       // default: calibration map
  std::optional<std::pair<double, double>> truncation;  // IPSW weights
  Ties ties = Ties::strict;
  EntropyOptions entropy;
  LogisticOptions logistic;
  PairSumOptions pair_sum;
};

struct EstimateDetail {
  PointEstimate point;
  std::map<std::string, double> diagnostics;
};

// Dispatch: builds maps, weights and models for the requested estimator,
// enforcing each estimator's data requirements (RequirementUnmet). `target`
// overrides the moments derived from patient-level RWD when provided.
EstimateDetail estimate_detailed(const EstimatorSpec& spec, const CombinedData& data,
                                 const std::optional<TargetMoments>& target = {});

PointEstimate estimate(const EstimatorSpec& spec, const CombinedData& data,
                       const std::optional<TargetMoments>& target = {});

}  // namespace aucshift
