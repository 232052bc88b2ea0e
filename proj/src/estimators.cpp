#include "aucshift/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "aucshift/parallel.hpp"

namespace aucshift {

const char* to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::naive: return "naive";
    case EstimatorTag::ipsw: return "ipsw";
    case EstimatorTag::cw: return "cw";
    case EstimatorTag::om: return "om";
    case EstimatorTag::om_rwd: return "om_rwd";
    case EstimatorTag::acw: return "acw";
    case EstimatorTag::aipsw: return "aipsw";
  }
  return "unknown";
}

EstimatorTag estimator_tag_from_string(const std::string& name) {
  if (name == "naive") return EstimatorTag::naive;
  if (name == "ipsw") return EstimatorTag::ipsw;
  if (name == "cw") return EstimatorTag::cw;
  if (name == "om") return EstimatorTag::om;
  if (name == "om_rwd" || name == "om-rwd") return EstimatorTag::om_rwd;
  if (name == "acw") return EstimatorTag::acw;
  if (name == "aipsw") return EstimatorTag::aipsw;
  fail(ErrorCode::BadConfig, "unknown estimator '" + name + "'");
}

PointEstimate weighted_auc(const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                           const Eigen::VectorXd& w, Ties ties) {
  const Eigen::Index n = y.size();
  if (d.size() != n || w.size() != n)
    fail(ErrorCode::DimensionMismatch, "y, d, w must share a length");
  std::vector<double> y1, w1, y0raw, w0raw;
  long long pos1 = 0, pos0 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(w(i) >= 0.0) || !std::isfinite(w(i)))
      fail(ErrorCode::BadValue, "weights must be finite and nonnegative");
    if (d(i) == 1.0) {
      y1.push_back(y(i));
      w1.push_back(w(i));
      if (w(i) > 0.0) ++pos1;
    } else if (d(i) == 0.0) {
      y0raw.push_back(y(i));
      w0raw.push_back(w(i));
      if (w(i) > 0.0) ++pos0;
    } else {
      fail(ErrorCode::BadValue, "response indicator must be 0 or 1");
    }
  }
  if (y1.empty() || y0raw.empty())
    fail(ErrorCode::NoPairs, "both response classes are required");

  // Sort the d=0 group once; prefix weight sums give, for every responder,
  // the non-responder mass strictly below (and tied with) its value.
  std::vector<std::size_t> order(y0raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return y0raw[a] < y0raw[b]; });
  std::vector<double> y0(order.size()), prefix(order.size() + 1, 0.0);
  KahanSum run;
  for (std::size_t k = 0; k < order.size(); ++k) {
    y0[k] = y0raw[order[k]];
    run.add(w0raw[order[k]]);
    prefix[k + 1] = run.value();
  }
  const double w0_total = prefix.back();

  KahanSum w1_sum;
  for (double v : w1) w1_sum.add(v);
  const double w1_total = w1_sum.value();
  if (!(w1_total > 0.0) || !(w0_total > 0.0))
    fail(ErrorCode::NoPairs, "a response class has zero total weight");

  KahanSum numerator;
  for (std::size_t i = 0; i < y1.size(); ++i) {
    if (w1[i] == 0.0) continue;
    const auto lo = std::lower_bound(y0.begin(), y0.end(), y1[i]) - y0.begin();
    double mass = prefix[static_cast<std::size_t>(lo)];
    if (ties == Ties::half) {
      const auto hi = std::upper_bound(y0.begin(), y0.end(), y1[i]) - y0.begin();
      mass += 0.5 * (prefix[static_cast<std::size_t>(hi)] -
                     prefix[static_cast<std::size_t>(lo)]);
    }
    numerator.add(w1[i] * mass);
  }

  PointEstimate out;
  out.numerator = numerator.value();
  out.denominator = w1_total * w0_total;
  out.value = out.numerator / out.denominator;
  out.effective_pairs = pos1 * pos0;
  return out;
}

namespace {

struct GroupSplit {
  Eigen::VectorXd m1, w1, m0, w0;
  long long pos1 = 0, pos0 = 0;
};

GroupSplit split_predicted(const Cohort& cohort, const OutcomeModelFit& fit,
                           const Eigen::VectorXd& w) {
  if (!cohort.d)
    fail(ErrorCode::RequirementUnmet, "cohort lacks response indicators");
  if (w.size() != cohort.n())
    fail(ErrorCode::DimensionMismatch, "weight length does not match cohort size");
  std::vector<Eigen::Index> idx1, idx0;
  for (Eigen::Index i = 0; i < cohort.n(); ++i)
    ((*cohort.d)(i) == 1.0 ? idx1 : idx0).push_back(i);
  if (idx1.empty() || idx0.empty())
    fail(ErrorCode::NoPairs, "both response classes are required");
  auto gather = [&](const std::vector<Eigen::Index>& idx, int d,
                    Eigen::VectorXd& m, Eigen::VectorXd& ww, long long& pos) {
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(idx.size()), cohort.p());
    ww.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = cohort.x.row(idx[r]);
      const double wi = w(idx[r]);
      if (!(wi >= 0.0) || !std::isfinite(wi))
        fail(ErrorCode::BadValue, "weights must be finite and nonnegative");
      ww(static_cast<Eigen::Index>(r)) = wi;
      if (wi > 0.0) ++pos;
    }
    m = predict_means(fit, xs, d);
  };
  GroupSplit out;
  gather(idx1, 1, out.m1, out.w1, out.pos1);
  gather(idx0, 0, out.m0, out.w0, out.pos0);
  return out;
}

PointEstimate om_core(const GroupSplit& g, const OutcomeModelFit& fit,
                      const PairSumOptions& pair_opts) {
  const double var = fit.sigma_0 * fit.sigma_0 + fit.sigma_1 * fit.sigma_1;
  if (!(var > 0.0))
    fail(ErrorCode::DegenerateVariance,
         "both residual scales are zero; pairwise probabilities degenerate");
  if (g.pos1 == 0 || g.pos0 == 0)
    fail(ErrorCode::NoPairs, "a response class has zero total weight");
  const PairSum ps =
      phi_pair_sum(g.m1, g.w1, g.m0, g.w0, std::sqrt(var), pair_opts);
  PointEstimate out;
  out.numerator = ps.numerator;
  out.denominator = ps.denominator;
  out.value = std::min(1.0, std::max(0.0, ps.numerator / ps.denominator));
  out.effective_pairs = g.pos1 * g.pos0;
  return out;
}

Eigen::VectorXd unit_weights(Eigen::Index n) { return Eigen::VectorXd::Ones(n); }

FeatureMap make_map(FeatureMap::Kind kind, int p, const std::vector<bool>& mask) {
  switch (kind) {
    case FeatureMap::Kind::g1_moments: return FeatureMap::g1(p, mask);
    case FeatureMap::Kind::g2_moments_interactions: return FeatureMap::g2(p, mask);
    case FeatureMap::Kind::custom:
      fail(ErrorCode::BadConfig, "custom maps must be supplied explicitly");
  }
  fail(ErrorCode::BadConfig, "unknown feature map kind");
}

}  // namespace

PointEstimate om_weighted(const Cohort& validation, const OutcomeModelFit& fit,
                          const Eigen::VectorXd& w, const PairSumOptions& pair_opts) {
  return om_core(split_predicted(validation, fit, w), fit, pair_opts);
}

PointEstimate om_rwd(const Cohort& rwd, const OutcomeModelFit& fit,
                     const PairSumOptions& pair_opts) {
  return om_core(split_predicted(rwd, fit, unit_weights(rwd.n())), fit, pair_opts);
}

PointEstimate acw(const CombinedData& data, const CalibrationSolution& cal,
                  const OutcomeModelFit& fit, Ties ties,
                  const PairSumOptions& pair_opts) {
  if (!data.rwd)
    fail(ErrorCode::RequirementUnmet, "acw requires patient-level RWD");
  if (!data.validation.y)
    fail(ErrorCode::RequirementUnmet, "acw requires validation biomarker values");
  const PointEstimate cw_pt = weighted_auc(*data.validation.y, *data.validation.d,
                                           cal.q_weights.w, ties);
  const PointEstimate om_pt =
      om_weighted(data.validation, fit, cal.q_weights.w, pair_opts);
  const PointEstimate omr_pt = om_rwd(*data.rwd, fit, pair_opts);
  PointEstimate out;
  out.value = cw_pt.value - om_pt.value + omr_pt.value;
  out.numerator = out.value;
  out.denominator = 1.0;
  out.effective_pairs = om_pt.effective_pairs;
  return out;
}

PointEstimate aipsw(const CombinedData& data, const SamplingFit& sfit,
                    const OutcomeModelFit& fit,
                    std::optional<std::pair<double, double>> truncation, Ties ties,
                    const PairSumOptions& pair_opts) {
  if (!data.rwd)
    fail(ErrorCode::RequirementUnmet, "aipsw requires patient-level RWD");
  if (!data.validation.y)
    fail(ErrorCode::RequirementUnmet, "aipsw requires validation biomarker values");
  WeightVector w = ipsw_weights(sfit, data.validation.x);
  if (truncation) w = truncate_normalize(w, truncation->first, truncation->second);
  const PointEstimate ipsw_pt =
      weighted_auc(*data.validation.y, *data.validation.d, w.w, ties);
  const PointEstimate om_pt = om_weighted(data.validation, fit, w.w, pair_opts);
  const PointEstimate omr_pt = om_rwd(*data.rwd, fit, pair_opts);
  PointEstimate out;
  out.value = ipsw_pt.value - om_pt.value + omr_pt.value;
  out.numerator = out.value;
  out.denominator = 1.0;
  out.effective_pairs = om_pt.effective_pairs;
  return out;
}

namespace {

TargetMoments resolve_target(const EstimatorSpec& spec, const CombinedData& data,
                             const std::optional<TargetMoments>& target,
                             const char* who) {
  if (target) return *target;
  if (data.rwd)
    return target_moments_from_cohort(
        make_map(spec.map_kind, static_cast<int>(data.validation.p()),
                 spec.continuous_mask),
        *data.rwd);
  fail(ErrorCode::RequirementUnmet,
       std::string(who) + " requires target moments (patient-level RWD or a "
                          "covariate summary)");
}

BasisSpec resolve_basis(const EstimatorSpec& spec, const CombinedData& data) {
  if (spec.outcome_basis) return *spec.outcome_basis;
  return BasisSpec::mains(static_cast<int>(data.validation.p()));
}

FeatureMap resolve_sampling_map(const EstimatorSpec& spec, const CombinedData& data) {
  if (spec.sampling_map) return *spec.sampling_map;
  return make_map(spec.map_kind, static_cast<int>(data.validation.p()),
                  spec.continuous_mask);
}

}  // namespace

EstimateDetail estimate_detailed(const EstimatorSpec& spec, const CombinedData& data,
                                 const std::optional<TargetMoments>& target) {
  const Cohort& v = data.validation;
  if (!v.y || !v.d)
    fail(ErrorCode::RequirementUnmet,
         "estimation requires a validation cohort with biomarker and response");
  EstimateDetail out;
  auto clamp01 = [](double t) { return std::min(1.0, std::max(0.0, t)); };

  switch (spec.tag) {
    case EstimatorTag::naive: {
      out.point = weighted_auc(*v.y, *v.d, unit_weights(v.n()), spec.ties);
      return out;
    }
    case EstimatorTag::ipsw: {
      if (!data.rwd)
        fail(ErrorCode::RequirementUnmet, "ipsw requires patient-level RWD");
      const SamplingFit sfit =
          fit_sampling_model(v.x, data.rwd->x, resolve_sampling_map(spec, data),
                             spec.logistic);
      WeightVector w = ipsw_weights(sfit, v.x);
      if (spec.truncation)
        w = truncate_normalize(w, spec.truncation->first, spec.truncation->second);
      out.point = weighted_auc(*v.y, *v.d, w.w, spec.ties);
      out.diagnostics["sampling_deviance"] = sfit.deviance;
      return out;
    }
    case EstimatorTag::cw: {
      const TargetMoments tm = resolve_target(spec, data, target, "cw");
      const Eigen::MatrixXd g = tm.map.apply_matrix(v.x);
      const CalibrationSolution cal = solve_entropy(g, tm, spec.entropy);
      out.point = weighted_auc(*v.y, *v.d, cal.q_weights.w, spec.ties);
      out.diagnostics["entropy_iterations"] = cal.iterations;
      out.diagnostics["entropy_residual"] = cal.residual;
      return out;
    }
    case EstimatorTag::om: {
      const TargetMoments tm = resolve_target(spec, data, target, "om");
      const Eigen::MatrixXd g = tm.map.apply_matrix(v.x);
      const CalibrationSolution cal = solve_entropy(g, tm, spec.entropy);
      const OutcomeModelFit ofit = fit_outcome(v, resolve_basis(spec, data));
      out.point = om_weighted(v, ofit, cal.q_weights.w, spec.pair_sum);
      out.diagnostics["sigma_0"] = ofit.sigma_0;
      out.diagnostics["sigma_1"] = ofit.sigma_1;
      return out;
    }
    case EstimatorTag::om_rwd: {
      if (!data.rwd)
        fail(ErrorCode::RequirementUnmet, "om_rwd requires patient-level RWD");
      const OutcomeModelFit ofit = fit_outcome(v, resolve_basis(spec, data));
      out.point = om_rwd(*data.rwd, ofit, spec.pair_sum);
      out.diagnostics["sigma_0"] = ofit.sigma_0;
      out.diagnostics["sigma_1"] = ofit.sigma_1;
      return out;
    }
    case EstimatorTag::acw: {
      if (!data.rwd)
        fail(ErrorCode::RequirementUnmet, "acw requires patient-level RWD");
      const TargetMoments tm = resolve_target(spec, data, target, "acw");
      const Eigen::MatrixXd g = tm.map.apply_matrix(v.x);
      const CalibrationSolution cal = solve_entropy(g, tm, spec.entropy);
      const OutcomeModelFit ofit = fit_outcome(v, resolve_basis(spec, data));
      const PointEstimate cw_pt =
          weighted_auc(*v.y, *v.d, cal.q_weights.w, spec.ties);
      const PointEstimate om_pt =
          om_weighted(v, ofit, cal.q_weights.w, spec.pair_sum);
      const PointEstimate omr_pt = om_rwd(*data.rwd, ofit, spec.pair_sum);
      out.point.value = cw_pt.value - om_pt.value + omr_pt.value;
      out.point.numerator = out.point.value;
      out.point.denominator = 1.0;
      out.point.effective_pairs = om_pt.effective_pairs;
      out.diagnostics["cw"] = cw_pt.value;
      out.diagnostics["om"] = om_pt.value;
      out.diagnostics["om_rwd"] = omr_pt.value;
      out.diagnostics["entropy_iterations"] = cal.iterations;
      out.diagnostics["entropy_residual"] = cal.residual;
      out.diagnostics["sigma_0"] = ofit.sigma_0;
      out.diagnostics["sigma_1"] = ofit.sigma_1;
      out.diagnostics["value_clamped"] = clamp01(out.point.value);
      return out;
    }
    case EstimatorTag::aipsw: {
      if (!data.rwd)
        fail(ErrorCode::RequirementUnmet, "aipsw requires patient-level RWD");
      const SamplingFit sfit =
          fit_sampling_model(v.x, data.rwd->x, resolve_sampling_map(spec, data),
                             spec.logistic);
      WeightVector w = ipsw_weights(sfit, v.x);
      if (spec.truncation)
        w = truncate_normalize(w, spec.truncation->first, spec.truncation->second);
      const OutcomeModelFit ofit = fit_outcome(v, resolve_basis(spec, data));
      const PointEstimate ipsw_pt = weighted_auc(*v.y, *v.d, w.w, spec.ties);
      const PointEstimate om_pt = om_weighted(v, ofit, w.w, spec.pair_sum);
      const PointEstimate omr_pt = om_rwd(*data.rwd, ofit, spec.pair_sum);
      out.point.value = ipsw_pt.value - om_pt.value + omr_pt.value;
      out.point.numerator = out.point.value;
      out.point.denominator = 1.0;
      out.point.effective_pairs = om_pt.effective_pairs;
      out.diagnostics["ipsw"] = ipsw_pt.value;
      out.diagnostics["om"] = om_pt.value;
      out.diagnostics["om_rwd"] = omr_pt.value;
      out.diagnostics["sampling_deviance"] = sfit.deviance;
      out.diagnostics["sigma_0"] = ofit.sigma_0;
      out.diagnostics["sigma_1"] = ofit.sigma_1;
      out.diagnostics["value_clamped"] = clamp01(out.point.value);
      return out;
    }
  }
  fail(ErrorCode::BadConfig, "unknown estimator tag");
}

PointEstimate estimate(const EstimatorSpec& spec, const CombinedData& data,
                       const std::optional<TargetMoments>& target) {
  return estimate_detailed(spec, data, target).point;
}

}  // namespace aucshift
