#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>

#include "aucshift/cohort.hpp"
#include "aucshift/error.hpp"
#include "aucshift/estimators.hpp"
#include "aucshift/outcome_model.hpp"
#include "aucshift/rng.hpp"
#include "aucshift/simlab.hpp"

using namespace aucshift;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::BadValue;
}

// O(n^2) reference for the weighted two-sample statistic.
PointEstimate brute_auc(const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                        const Eigen::VectorXd& w, Ties ties) {
  long double num = 0.0L, den = 0.0L;
  long long pairs = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (d(i) != 1.0) continue;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      if (d(j) != 0.0) continue;
      const long double pw = static_cast<long double>(w(i)) * w(j);
      den += pw;
      if (pw > 0.0L) ++pairs;
      if (y(i) > y(j)) num += pw;
      else if (ties == Ties::half && y(i) == y(j)) num += pw / 2.0L;
    }
  }
  PointEstimate out;
  out.numerator = static_cast<double>(num);
  out.denominator = static_cast<double>(den);
  out.value = static_cast<double>(num / den);
  out.effective_pairs = pairs;
  return out;
}

// A moderate-shift validation/RWD pair from the simulation machinery.
CombinedData sim_data(std::uint64_t seed, long long n_pop = 6000,
                      long long n_val = 300, long long m_rwd = 1500) {
  DgpSpec dgp = DgpSpec::defaults();
  dgp.N_pop = n_pop;
  dgp.n_val = n_val;
  dgp.m_rwd = m_rwd;
  dgp.sampling_alpha = shift_alpha(Shift::moderate);
  Rng pop_rng(derive_seed(seed, 0, 0, stream::population));
  const Cohort population = generate_population(dgp, dgp.N_pop, pop_rng);
  Rng sel_rng(derive_seed(seed, 0, 0, stream::selection));
  CombinedData data;
  data.validation = select_validation(population, dgp.sampling_alpha, n_val, sel_rng);
  Rng rwd_rng(derive_seed(seed, 0, 0, stream::rwd));
  data.rwd = generate_population(dgp, m_rwd, rwd_rng, Role::rwd);
  return data;
}

double run(EstimatorTag tag, const CombinedData& data,
           const std::optional<TargetMoments>& target = {}) {
  EstimatorSpec spec;
  spec.tag = tag;
  return estimate(spec, data, target).value;
}

}  // namespace

TEST_CASE("worked example: y=(3,1,2,2) d=(1,0,1,0) w=(1,1,2,3)") {
  Eigen::VectorXd y(4), d(4), w(4);
  y << 3, 1, 2, 2;
  d << 1, 0, 1, 0;
  w << 1, 1, 2, 3;
  const PointEstimate strict = weighted_auc(y, d, w, Ties::strict);
  CHECK(strict.numerator == 6.0);
  CHECK(strict.denominator == 12.0);
  CHECK(strict.value == 0.5);
  CHECK(strict.effective_pairs == 4);
  // The single tied pair (y=2 vs y=2) carries weight 2*3.
  const PointEstimate half = weighted_auc(y, d, w, Ties::half);
  CHECK(half.numerator == 9.0);
  CHECK(half.value == 0.75);
}

TEST_CASE("prefix-sum statistic equals the brute-force double sum") {
  Rng rng(42);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 5 + static_cast<int>(rng.below(56));
    Eigen::VectorXd y(n), d(n), w(n);
    bool has1 = false, has0 = false;
    for (int i = 0; i < n; ++i) {
      y(i) = static_cast<double>(rng.below(8));  // heavy ties
      d(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
      const double pick = rng.uniform();
      w(i) = pick < 0.15 ? 0.0 : (pick < 0.5 ? 0.5 : rng.uniform(0.1, 4.0));
      has1 = has1 || d(i) == 1.0;
      has0 = has0 || d(i) == 0.0;
    }
    if (!has1) d(0) = 1.0;
    if (!has0) d(n - 1) = 0.0;
    if ((d.array() == 1.0).select(w.array(), 0.0).sum() == 0.0) {
      d(0) = 1.0;
      w(0) = 1.0;
    }
    if ((d.array() == 0.0).select(w.array(), 0.0).sum() == 0.0) {
      d(n - 1) = 0.0;
      w(n - 1) = 1.0;
    }
    for (Ties ties : {Ties::strict, Ties::half}) {
      const PointEstimate fast = weighted_auc(y, d, w, ties);
      const PointEstimate ref = brute_auc(y, d, w, ties);
      CHECK(std::abs(fast.value - ref.value) < 1e-12);
      CHECK(std::abs(fast.numerator - ref.numerator) < 1e-9 * (1.0 + ref.numerator));
      CHECK(fast.effective_pairs == ref.effective_pairs);
    }
  }
}

TEST_CASE("the statistic is invariant to weight rescaling") {
  Rng rng(17);
  const int n = 80;
  Eigen::VectorXd y(n), d(n), w(n);
  for (int i = 0; i < n; ++i) {
    y(i) = rng.normal();
    d(i) = i % 3 == 0 ? 1.0 : 0.0;
    w(i) = rng.uniform(0.05, 2.0);
  }
  const double base = weighted_auc(y, d, w).value;
  CHECK(std::abs(weighted_auc(y, d, 7.3 * w).value - base) < 1e-12);
  CHECK(std::abs(weighted_auc(y, d, 1e-6 * w).value - base) < 1e-12);
}

TEST_CASE("half-tie values dominate strict values") {
  Eigen::VectorXd y(6), d(6), w(6);
  y << 1, 1, 2, 2, 3, 3;
  d << 1, 0, 1, 0, 1, 0;
  w << 1, 2, 1, 1, 2, 1;
  CHECK(weighted_auc(y, d, w, Ties::half).value >=
        weighted_auc(y, d, w, Ties::strict).value);
}

TEST_CASE("weighted_auc validates its inputs") {
  Eigen::VectorXd y(4), d(4), w(4);
  y << 1, 2, 3, 4;
  d << 1, 0, 1, 0;
  w << 1, 1, 1, 1;
  SUBCASE("length mismatch") {
    Eigen::VectorXd short_w(3);
    short_w << 1, 1, 1;
    CHECK(code_of([&] { weighted_auc(y, d, short_w); }) ==
          ErrorCode::DimensionMismatch);
  }
  SUBCASE("invalid class labels") {
    Eigen::VectorXd bad = d;
    bad(1) = 0.5;
    CHECK(code_of([&] { weighted_auc(y, bad, w); }) == ErrorCode::BadValue);
  }
  SUBCASE("negative weights") {
    Eigen::VectorXd bad = w;
    bad(2) = -1.0;
    CHECK(code_of([&] { weighted_auc(y, d, bad); }) == ErrorCode::BadValue);
  }
  SUBCASE("single-class input") {
    CHECK(code_of([&] { weighted_auc(y, Eigen::VectorXd::Ones(4), w); }) ==
          ErrorCode::NoPairs);
  }
  SUBCASE("zero mass on one side") {
    Eigen::VectorXd mass = w;
    mass(0) = mass(2) = 0.0;  // kills every responder
    CHECK(code_of([&] { weighted_auc(y, d, mass); }) == ErrorCode::NoPairs);
  }
}

TEST_CASE("outcome-model value equals the direct probability average") {
  const CombinedData data = sim_data(5, 4000, 150, 600);
  const OutcomeModelFit fit = fit_outcome(data.validation, BasisSpec::mains(3));
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(data.validation.n());
  const PointEstimate om = om_weighted(data.validation, fit, w);

  long double num = 0.0L;
  long long cnt = 0;
  const auto& v = data.validation;
  for (Eigen::Index i = 0; i < v.n(); ++i) {
    if ((*v.d)(i) != 1.0) continue;
    for (Eigen::Index j = 0; j < v.n(); ++j) {
      if ((*v.d)(j) != 0.0) continue;
      num += pair_prob(fit, v.x.row(i), v.x.row(j));
      ++cnt;
    }
  }
  CHECK(om.value ==
        doctest::Approx(static_cast<double>(num / cnt)).epsilon(1e-10));
  CHECK(om.value >= 0.0);
  CHECK(om.value <= 1.0);
}

TEST_CASE("rwd outcome-model value averages over rwd pairs") {
  const CombinedData data = sim_data(6, 4000, 150, 400);
  const OutcomeModelFit fit = fit_outcome(data.validation, BasisSpec::mains(3));
  const PointEstimate omr = om_rwd(*data.rwd, fit);

  long double num = 0.0L;
  long long cnt = 0;
  const auto& r = *data.rwd;
  for (Eigen::Index i = 0; i < r.n(); ++i) {
    if ((*r.d)(i) != 1.0) continue;
    for (Eigen::Index j = 0; j < r.n(); ++j) {
      if ((*r.d)(j) != 0.0) continue;
      num += pair_prob(fit, r.x.row(i), r.x.row(j));
      ++cnt;
    }
  }
  CHECK(omr.value ==
        doctest::Approx(static_cast<double>(num / cnt)).epsilon(1e-10));
}

TEST_CASE("zero residual scales degenerate the pairwise probability") {
  Eigen::MatrixXd x(10, 1);
  Eigen::VectorXd y(10), d(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = static_cast<double>(i);
    d(i) = i % 2 == 0 ? 1.0 : 0.0;
    y(i) = 2.0 * x(i, 0) + (i % 3) * 0.1;
  }
  const Cohort c = make_cohort(x, y, d, std::nullopt, Role::validation, {"x1"});
  OutcomeModelFit fit = fit_outcome(c, BasisSpec::mains(1));
  fit.sigma_0 = 0.0;  // the guard is on the values, however they arose
  fit.sigma_1 = 0.0;
  CHECK(code_of([&] {
          om_weighted(c, fit, Eigen::VectorXd::Ones(10));
        }) == ErrorCode::DegenerateVariance);
  CHECK(code_of([&] { pair_prob(fit, x.row(0), x.row(1)); }) ==
        ErrorCode::DegenerateVariance);
}

TEST_CASE("composite estimators decompose as first - om + om_rwd") {
  const CombinedData data = sim_data(7);
  EstimatorSpec spec;

  spec.tag = EstimatorTag::cw;
  const double cw = estimate(spec, data).value;
  spec.tag = EstimatorTag::om;
  const double om = estimate(spec, data).value;
  spec.tag = EstimatorTag::om_rwd;
  const double omr = estimate(spec, data).value;
  spec.tag = EstimatorTag::acw;
  const PointEstimate acw_pt = estimate(spec, data);
  CHECK(acw_pt.value == doctest::Approx(cw - om + omr).epsilon(1e-12));
  CHECK(acw_pt.denominator == 1.0);
  CHECK(acw_pt.numerator == acw_pt.value);

  spec.tag = EstimatorTag::ipsw;
  spec.truncation = {{0.1, 99.9}};
  const double ipsw = estimate(spec, data).value;
  spec.tag = EstimatorTag::aipsw;
  const double aipsw = estimate(spec, data).value;
  // aipsw pairs the om correction with ipsw weights, so recompute that piece.
  const TargetMoments tm = target_moments_from_cohort(
      FeatureMap::g1(3), *data.rwd);
  const SamplingFit sfit = fit_sampling_model(data.validation.x, data.rwd->x,
                                              FeatureMap::g1(3));
  WeightVector wi = ipsw_weights(sfit, data.validation.x);
  wi = truncate_normalize(wi, 0.1, 99.9);
  const OutcomeModelFit ofit = fit_outcome(data.validation, BasisSpec::mains(3));
  const double om_ipsw = om_weighted(data.validation, ofit, wi.w).value;
  CHECK(aipsw == doctest::Approx(ipsw - om_ipsw + omr).epsilon(1e-10));
  (void)tm;
}

TEST_CASE("estimators collapse to the naive statistic without real shift") {
  // RWD identical to the validation covariates: the sampling model is null,
  // entropy balancing stops at uniform weights, and every weighted estimator
  // must reproduce the naive value.
  const CombinedData base = sim_data(8);
  CombinedData data;
  data.validation = base.validation;
  Cohort rwd = base.validation;
  rwd.role = Role::rwd;
  data.rwd = rwd;

  const double naive = run(EstimatorTag::naive, data);
  CHECK(std::abs(run(EstimatorTag::ipsw, data) - naive) < 1e-10);
  CHECK(std::abs(run(EstimatorTag::cw, data) - naive) < 1e-10);
  // With identical cohorts the om correction cancels against om_rwd exactly.
  CHECK(std::abs(run(EstimatorTag::acw, data) - run(EstimatorTag::cw, data)) <
        1e-10);
  CHECK(std::abs(run(EstimatorTag::aipsw, data) - run(EstimatorTag::ipsw, data)) <
        1e-10);
}

TEST_CASE("self-calibration leaves weights uniform") {
  const CombinedData base = sim_data(9);
  const FeatureMap map = FeatureMap::g1(3);
  const TargetMoments self =
      target_moments_from_cohort(map, base.validation);
  CombinedData data;
  data.validation = base.validation;
  EstimatorSpec spec;
  spec.tag = EstimatorTag::cw;
  const double cw = estimate(spec, data, self).value;
  spec.tag = EstimatorTag::naive;
  const double naive = estimate(spec, data, self).value;
  CHECK(std::abs(cw - naive) < 1e-10);
}

TEST_CASE("weight truncation changes heavy-tailed ipsw fits") {
  const CombinedData data = sim_data(10, 8000, 400, 2000);
  EstimatorSpec spec;
  spec.tag = EstimatorTag::ipsw;
  const double untruncated = estimate(spec, data).value;
  spec.truncation = {{10.0, 90.0}};  // aggressive window to force a difference
  const double truncated = estimate(spec, data).value;
  CHECK(untruncated != truncated);
  CHECK(truncated >= 0.0);
  CHECK(truncated <= 1.0);
}

TEST_CASE("estimator requirements are enforced") {
  const CombinedData full = sim_data(11);
  CombinedData no_rwd;
  no_rwd.validation = full.validation;

  CHECK(code_of([&] { run(EstimatorTag::ipsw, no_rwd); }) ==
        ErrorCode::RequirementUnmet);
  CHECK(code_of([&] { run(EstimatorTag::cw, no_rwd); }) ==
        ErrorCode::RequirementUnmet);
  CHECK(code_of([&] { run(EstimatorTag::om_rwd, no_rwd); }) ==
        ErrorCode::RequirementUnmet);
  CHECK(code_of([&] { run(EstimatorTag::acw, no_rwd); }) ==
        ErrorCode::RequirementUnmet);
  CHECK(code_of([&] { run(EstimatorTag::aipsw, no_rwd); }) ==
        ErrorCode::RequirementUnmet);

  // A covariate summary substitutes for patient-level data where moments
  // suffice (cw, om) but not where rwd rows are required.
  const TargetMoments tm =
      target_moments_from_cohort(FeatureMap::g1(3), *full.rwd);
  CHECK_NOTHROW(run(EstimatorTag::cw, no_rwd, tm));
  CHECK_NOTHROW(run(EstimatorTag::om, no_rwd, tm));
  CHECK(code_of([&] { run(EstimatorTag::om_rwd, no_rwd, tm); }) ==
        ErrorCode::RequirementUnmet);
  CHECK(code_of([&] { run(EstimatorTag::acw, no_rwd, tm); }) ==
        ErrorCode::RequirementUnmet);
}

TEST_CASE("rwd biomarker values are never consulted") {
  const CombinedData full = sim_data(12);
  CombinedData data;
  data.validation = full.validation;
  data.rwd = make_cohort(full.rwd->x, std::nullopt, *full.rwd->d, std::nullopt,
                         Role::rwd, full.rwd->column_names);
  for (EstimatorTag tag :
       {EstimatorTag::naive, EstimatorTag::ipsw, EstimatorTag::cw,
        EstimatorTag::om, EstimatorTag::om_rwd, EstimatorTag::acw,
        EstimatorTag::aipsw})
    CHECK(run(tag, data) == run(tag, full));

  // Dropping the response as well makes the cohort unconstructible.
  CHECK(code_of([&] {
          make_cohort(full.rwd->x, std::nullopt, std::nullopt, std::nullopt,
                      Role::rwd, full.rwd->column_names);
        }) == ErrorCode::MissingColumn);
}

TEST_CASE("g2 calibration matches g1 on matched targets") {
  const CombinedData data = sim_data(13);
  EstimatorSpec g1_spec, g2_spec;
  g1_spec.tag = g2_spec.tag = EstimatorTag::cw;
  g1_spec.map_kind = FeatureMap::Kind::g1_moments;
  g2_spec.map_kind = FeatureMap::Kind::g2_moments_interactions;
  const double v1 = estimate(g1_spec, data).value;
  const double v2 = estimate(g2_spec, data).value;
  // Different moment sets give different but nearby calibrations.
  CHECK(std::abs(v1 - v2) < 0.05);
  CHECK(v1 != v2);
}

TEST_CASE("estimator names round-trip") {
  for (EstimatorTag tag :
       {EstimatorTag::naive, EstimatorTag::ipsw, EstimatorTag::cw,
        EstimatorTag::om, EstimatorTag::om_rwd, EstimatorTag::acw,
        EstimatorTag::aipsw})
    CHECK(estimator_tag_from_string(to_string(tag)) == tag);
  CHECK(code_of([] { estimator_tag_from_string("nope"); }) ==
        ErrorCode::BadConfig);
}

TEST_CASE("diagnostics expose the moving parts") {
  const CombinedData data = sim_data(14);
  EstimatorSpec spec;
  spec.tag = EstimatorTag::acw;
  const EstimateDetail detail = estimate_detailed(spec, data);
  CHECK(detail.diagnostics.count("entropy_iterations") == 1);
  CHECK(detail.diagnostics.count("entropy_residual") == 1);
  CHECK(detail.diagnostics.count("sigma_0") == 1);
  CHECK(detail.diagnostics.count("sigma_1") == 1);
  CHECK(detail.diagnostics.count("value_clamped") == 1);
  CHECK(detail.diagnostics.at("entropy_residual") <= 1e-8);

  spec.tag = EstimatorTag::ipsw;
  const EstimateDetail ipsw_detail = estimate_detailed(spec, data);
  CHECK(ipsw_detail.diagnostics.count("sampling_deviance") == 1);
}
