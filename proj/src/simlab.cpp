#include "aucshift/simlab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "aucshift/entropy_balance.hpp"
#include "aucshift/inference.hpp"
#include "aucshift/logistic.hpp"
#include "aucshift/outcome_model.hpp"
#include "aucshift/pair_kernel.hpp"
#include "aucshift/parallel.hpp"

namespace aucshift {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double expit(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

const char* to_string(Shift shift) {
  switch (shift) {
    case Shift::none: return "none";
    case Shift::moderate: return "moderate";
    case Shift::severe: return "severe";
  }
  return "unknown";
}

Shift shift_from_string(const std::string& name) {
  if (name == "none") return Shift::none;
  if (name == "moderate") return Shift::moderate;
  if (name == "severe") return Shift::severe;
  fail(ErrorCode::BadConfig, "unknown shift '" + name + "'");
}

Eigen::Vector4d shift_alpha(Shift shift) {
  switch (shift) {
    case Shift::none: return {0.15, 0.0, 0.0, 0.0};
    case Shift::moderate: return {0.15, 0.30, -0.10, 0.10};
    case Shift::severe: return {0.15, 0.45, -0.25, 0.20};
  }
  fail(ErrorCode::BadConfig, "unknown shift level");
}

const char* to_string(SpecCell cell) {
  switch (cell) {
    case SpecCell::both_correct: return "both_correct";
    case SpecCell::sm_correct_om_wrong: return "sm_correct_om_wrong";
    case SpecCell::sm_wrong_om_correct: return "sm_wrong_om_correct";
    case SpecCell::both_wrong: return "both_wrong";
  }
  return "unknown";
}

SpecCell spec_cell_from_string(const std::string& name) {
  if (name == "both_correct") return SpecCell::both_correct;
  if (name == "sm_correct_om_wrong") return SpecCell::sm_correct_om_wrong;
  if (name == "sm_wrong_om_correct") return SpecCell::sm_wrong_om_correct;
  if (name == "both_wrong") return SpecCell::both_wrong;
  fail(ErrorCode::BadConfig, "unknown specification cell '" + name + "'");
}

const char* to_string(WrongForm form) {
  switch (form) {
    case WrongForm::omit_x1: return "omit_x1";
    case WrongForm::mains: return "mains";
    case WrongForm::x3_only: return "x3_only";
    case WrongForm::intercept_only: return "intercept_only";
  }
  return "unknown";
}

WrongForm wrong_form_from_string(const std::string& name) {
  if (name == "omit_x1") return WrongForm::omit_x1;
  if (name == "mains") return WrongForm::mains;
  if (name == "x3_only") return WrongForm::x3_only;
  if (name == "intercept_only") return WrongForm::intercept_only;
  fail(ErrorCode::BadConfig, "unknown wrong-model form '" + name + "'");
}

DgpSpec DgpSpec::defaults() {
  DgpSpec dgp;
  dgp.outcome_coeffs.resize(8);
  dgp.outcome_coeffs << 0.2, -0.15, 0.2, 0.1, -0.1, 0.15, 0.4, 0.2;
  dgp.response_coeffs.resize(5);
  dgp.response_coeffs << 0.2, -0.25, -0.15, 0.25, 0.3;
  dgp.sampling_alpha = shift_alpha(Shift::none);
  return dgp;
}

Cohort generate_population(const DgpSpec& dgp, long long size, Rng& rng, Role role) {
  if (size <= 0) fail(ErrorCode::BadConfig, "population size must be positive");
  if (dgp.outcome_coeffs.size() != 8)
    fail(ErrorCode::BadConfig, "outcome_coeffs must have 8 entries");
  if (dgp.response_coeffs.size() != 5)
    fail(ErrorCode::BadConfig, "response_coeffs must have 5 entries");
  const auto n = static_cast<Eigen::Index>(size);
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n), d(n);
  const Eigen::VectorXd& b = dgp.outcome_coeffs;
  const Eigen::VectorXd& c = dgp.response_coeffs;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = rng.normal(1.0, 0.5);
    const double x2 = rng.normal(-1.0, 0.5);
    const double x3 = rng.uniform();
    const double eta_d =
        c(0) + c(1) * x1 + c(2) * x2 + c(3) * x2 * x3 + c(4) * x3 * x3;
    const double di = rng.uniform() < expit(eta_d) ? 1.0 : 0.0;
    const double mean_y = b(0) + b(1) * x1 + b(2) * x3 + b(3) * x2 * x3 +
                          b(4) * x2 * x2 +
                          di * (b(5) + b(6) * x1 * x1 + b(7) * x1 * x3);
    x(i, 0) = x1;
    x(i, 1) = x2;
    x(i, 2) = x3;
    d(i) = di;
    y(i) = mean_y + rng.normal(0.0, dgp.noise_sd);
  }
  return make_cohort(std::move(x), std::move(y), std::move(d), std::nullopt, role,
                     {"x1", "x2", "x3"});
}

TauOracle true_tau0(const DgpSpec& dgp, long long oracle_size, std::uint64_t seed) {
  if (oracle_size < 1000)
    fail(ErrorCode::BadConfig, "oracle sample must have at least 1000 rows");
  Rng rng(derive_seed(seed, 0, 0, stream::oracle));
  const Cohort big = generate_population(dgp, oracle_size, rng);
  TauOracle out;
  out.sample_size = oracle_size;
  const Eigen::VectorXd unit = Eigen::VectorXd::Ones(big.n());
  out.tau0 = weighted_auc(*big.y, *big.d, unit, Ties::strict).value;

  // MC uncertainty: AUCs of 20 disjoint consecutive chunks.
  constexpr int kChunks = 20;
  const Eigen::Index base = big.n() / kChunks;
  std::vector<double> chunk_auc;
  Eigen::Index start = 0;
  for (int k = 0; k < kChunks; ++k) {
    const Eigen::Index len = base + (k < big.n() % kChunks ? 1 : 0);
    chunk_auc.push_back(weighted_auc(big.y->segment(start, len),
                                     big.d->segment(start, len),
                                     Eigen::VectorXd::Ones(len), Ties::strict)
                            .value);
    start += len;
  }
  KahanSum sum;
  for (double v : chunk_auc) sum.add(v);
  const double mean = sum.value() / kChunks;
  KahanSum ss;
  for (double v : chunk_auc) ss.add((v - mean) * (v - mean));
  const double sd = std::sqrt(ss.value() / (kChunks - 1));
  out.half_width = 1.96 * sd / std::sqrt(static_cast<double>(kChunks));
  return out;
}

Cohort select_validation(const Cohort& population, const Eigen::Vector4d& alpha,
                         long long n_val, Rng& rng) {
  if (n_val <= 0 || n_val > population.n())
    fail(ErrorCode::BadConfig, "n_val must be in [1, population size]");
  if (population.p() != 3)
    fail(ErrorCode::BadConfig, "selection model expects the 3-covariate DGP");
  const Eigen::Index n = population.n();
  // Weighted sequential sampling without replacement: key_i = log(u_i)/pi_i,
  // keep the n_val largest keys.
  std::vector<std::pair<double, Eigen::Index>> keys(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = population.x(i, 0);
    const double x2 = population.x(i, 1);
    const double x3 = population.x(i, 2);
    const double pi =
        expit(alpha(0) + alpha(1) * x1 * x1 + alpha(2) * x2 * x2 + alpha(3) * x1 * x3);
    const double u = 1.0 - rng.uniform();  // (0,1]
    keys[static_cast<std::size_t>(i)] = {std::log(u) / pi, i};
  }
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_val));
  for (long long k = 0; k < n_val; ++k)
    idx[static_cast<std::size_t>(k)] = keys[static_cast<std::size_t>(k)].second;
  std::sort(idx.begin(), idx.end());
  Cohort out = resample_rows(population, idx);
  out.role = Role::validation;
  return out;
}

namespace {

std::vector<FeatureMap::Term> wrong_terms(WrongForm form) {
  using T = FeatureMap::Term;
  switch (form) {
    case WrongForm::omit_x1: return {T::main(1), T::main(2)};
    case WrongForm::mains: return {T::main(0), T::main(1), T::main(2)};
    case WrongForm::x3_only: return {T::main(2)};
    case WrongForm::intercept_only: return {};
  }
  fail(ErrorCode::BadConfig, "unknown wrong-model form");
}

FeatureMap sampling_map_for(SpecCell cell, WrongForm form) {
  using T = FeatureMap::Term;
  const bool correct =
      cell == SpecCell::both_correct || cell == SpecCell::sm_correct_om_wrong;
  if (correct)
    return FeatureMap::custom(3, {T::square(0), T::square(1), T::interaction(0, 2)});
  return FeatureMap::custom(3, wrong_terms(form));
}

BasisSpec outcome_basis_for(SpecCell cell, WrongForm form) {
  using T = FeatureMap::Term;
  const bool correct =
      cell == SpecCell::both_correct || cell == SpecCell::sm_wrong_om_correct;
  BasisSpec basis;
  if (correct) {
    basis.terms_d0 = {T::main(0), T::main(2), T::interaction(1, 2), T::square(1)};
    basis.terms_d1 = basis.terms_d0;
    basis.terms_d1.push_back(T::square(0));
    basis.terms_d1.push_back(T::interaction(0, 2));
  } else {
    basis.terms_d0 = wrong_terms(form);
    basis.terms_d1 = basis.terms_d0;
  }
  return basis;
}

enum GridIndex {
  kNaive = 0,
  kIpsw,
  kCwG1,
  kCwG2,
  kOmG1,
  kOmG2,
  kOmRwd,
  kAipsw,
  kAcwG1,
  kAcwG2,
  kGridSize
};

struct GridConfig {
  std::array<bool, kGridSize> want{};
  FeatureMap g1, g2;
  FeatureMap sampling_map;
  BasisSpec outcome_basis;
  EntropyOptions entropy;
  LogisticOptions logistic;
  PairSumOptions pair_sum;

  bool need_q1() const { return want[kCwG1] || want[kOmG1] || want[kAcwG1]; }
  bool need_q2() const { return want[kCwG2] || want[kOmG2] || want[kAcwG2]; }
  bool need_sampling() const { return want[kIpsw] || want[kAipsw]; }
  bool need_outcome() const {
    return want[kOmG1] || want[kOmG2] || want[kOmRwd] || want[kAipsw] ||
           want[kAcwG1] || want[kAcwG2];
  }
  bool need_om_rwd() const {
    return want[kOmRwd] || want[kAipsw] || want[kAcwG1] || want[kAcwG2];
  }
};

// All requested grid estimators on one dataset, sharing calibration weights,
// the sampling fit, and the outcome fit. A failed piece turns exactly the
// estimators depending on it into NaN; everything else proceeds.
std::array<double, kGridSize> grid_values(const Cohort& validation, const Cohort& rwd,
                                          const GridConfig& cfg) {
  std::array<double, kGridSize> out;
  out.fill(kNaN);
  const Eigen::VectorXd unit = Eigen::VectorXd::Ones(validation.n());

  if (cfg.want[kNaive]) {
    try {
      out[kNaive] = weighted_auc(*validation.y, *validation.d, unit, Ties::strict).value;
    } catch (const Error&) {
    }
  }

  std::optional<Eigen::VectorXd> q1, q2;
  if (cfg.need_q1()) {
    try {
      const TargetMoments tm = target_moments_from_cohort(cfg.g1, rwd);
      q1 = solve_entropy(cfg.g1.apply_matrix(validation.x), tm, cfg.entropy)
               .q_weights.w;
    } catch (const Error&) {
    }
  }
  if (cfg.need_q2()) {
    try {
      const TargetMoments tm = target_moments_from_cohort(cfg.g2, rwd);
      q2 = solve_entropy(cfg.g2.apply_matrix(validation.x), tm, cfg.entropy)
               .q_weights.w;
    } catch (const Error&) {
    }
  }
  std::optional<Eigen::VectorXd> w_ipsw;
  if (cfg.need_sampling()) {
    try {
      const SamplingFit sfit =
          fit_sampling_model(validation.x, rwd.x, cfg.sampling_map, cfg.logistic);
      w_ipsw = ipsw_weights(sfit, validation.x).w;
    } catch (const Error&) {
    }
  }
  std::optional<OutcomeModelFit> ofit;
  if (cfg.need_outcome()) {
    try {
      ofit = fit_outcome(validation, cfg.outcome_basis);
    } catch (const Error&) {
    }
  }

  auto auc_with = [&](const Eigen::VectorXd& w) -> double {
    return weighted_auc(*validation.y, *validation.d, w, Ties::strict).value;
  };
  auto om_with = [&](const Eigen::VectorXd& w) -> double {
    return om_weighted(validation, *ofit, w, cfg.pair_sum).value;
  };

  if (cfg.want[kCwG1] && q1) {
    try {
      out[kCwG1] = auc_with(*q1);
    } catch (const Error&) {
    }
  }
  if (cfg.want[kCwG2] && q2) {
    try {
      out[kCwG2] = auc_with(*q2);
    } catch (const Error&) {
    }
  }
  if (cfg.want[kIpsw] && w_ipsw) {
    try {
      out[kIpsw] = auc_with(*w_ipsw);
    } catch (const Error&) {
    }
  }

  double om_rwd_val = kNaN;
  if (cfg.need_om_rwd() && ofit) {
    try {
      om_rwd_val = om_rwd(rwd, *ofit, cfg.pair_sum).value;
    } catch (const Error&) {
    }
  }
  if (cfg.want[kOmRwd]) out[kOmRwd] = om_rwd_val;

  double om1 = kNaN, om2 = kNaN;
  if ((cfg.want[kOmG1] || cfg.want[kAcwG1]) && q1 && ofit) {
    try {
      om1 = om_with(*q1);
    } catch (const Error&) {
    }
  }
  if ((cfg.want[kOmG2] || cfg.want[kAcwG2]) && q2 && ofit) {
    try {
      om2 = om_with(*q2);
    } catch (const Error&) {
    }
  }
  if (cfg.want[kOmG1]) out[kOmG1] = om1;
  if (cfg.want[kOmG2]) out[kOmG2] = om2;

  if (cfg.want[kAcwG1] && std::isfinite(out[kCwG1] + om1 + om_rwd_val))
    out[kAcwG1] = out[kCwG1] - om1 + om_rwd_val;
  if (cfg.want[kAcwG2] && std::isfinite(out[kCwG2] + om2 + om_rwd_val))
    out[kAcwG2] = out[kCwG2] - om2 + om_rwd_val;
  if (cfg.want[kAipsw] && w_ipsw && ofit && std::isfinite(out[kIpsw] + om_rwd_val)) {
    try {
      out[kAipsw] = out[kIpsw] - om_with(*w_ipsw) + om_rwd_val;
    } catch (const Error&) {
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& estimator_grid() {
  static const std::vector<std::string> names = {
      "naive", "ipsw",   "cw_g1", "cw_g2",  "om_g1",
      "om_g2", "om_rwd", "aipsw", "acw_g1", "acw_g2"};
  return names;
}

ScenarioResult run_scenario(const ScenarioSpec& scenario) {
  if (scenario.n_reps <= 0) fail(ErrorCode::BadConfig, "n_reps must be positive");
  if (scenario.n_boot == 1)
    fail(ErrorCode::BadConfig, "n_boot must be 0 (no bootstrap) or at least 2");

  GridConfig cfg;
  if (scenario.estimators.empty()) {
    cfg.want.fill(true);
  } else {
    const auto& grid = estimator_grid();
    for (const std::string& name : scenario.estimators) {
      const auto it = std::find(grid.begin(), grid.end(), name);
      if (it == grid.end())
        fail(ErrorCode::BadConfig, "unknown grid estimator '" + name + "'");
      cfg.want[static_cast<std::size_t>(it - grid.begin())] = true;
    }
  }
  cfg.g1 = FeatureMap::g1(3);
  cfg.g2 = FeatureMap::g2(3);
  cfg.sampling_map = sampling_map_for(scenario.spec_cell, scenario.wrong_form);
  cfg.outcome_basis = outcome_basis_for(scenario.spec_cell, scenario.wrong_form);
  // The inner pairwise sums switch to the series expansion earlier than the
  // library default: the bootstrap re-evaluates them hundreds of times.
  cfg.pair_sum.fast_min_pairs = std::size_t{1} << 16;

  DgpSpec dgp = scenario.dgp;
  dgp.sampling_alpha = shift_alpha(scenario.shift);
  const int threads = scenario.threads > 0 ? scenario.threads : hardware_threads();

  ScenarioResult result;
  result.scenario = scenario;
  result.scenario.dgp = dgp;
  result.scenario.threads = threads;
  result.oracle = true_tau0(dgp, scenario.oracle_size, scenario.seed);
  result.estimator_names = estimator_grid();

  const auto n_reps = static_cast<Eigen::Index>(scenario.n_reps);
  result.estimates = Eigen::MatrixXd::Constant(n_reps, kGridSize, kNaN);
  result.boot_se = Eigen::MatrixXd::Constant(n_reps, kGridSize, kNaN);

  parallel_for(static_cast<std::size_t>(n_reps), threads, [&](std::size_t r) {
    const auto rep = static_cast<std::uint64_t>(r);
    Rng pop_rng(derive_seed(scenario.seed, rep, 0, stream::population));
    const Cohort population = generate_population(dgp, dgp.N_pop, pop_rng);
    Rng sel_rng(derive_seed(scenario.seed, rep, 0, stream::selection));
    const Cohort validation =
        select_validation(population, dgp.sampling_alpha, dgp.n_val, sel_rng);
    Rng rwd_rng(derive_seed(scenario.seed, rep, 0, stream::rwd));
    const Cohort rwd = generate_population(dgp, dgp.m_rwd, rwd_rng, Role::rwd);

    const auto vals = grid_values(validation, rwd, cfg);
    for (int e = 0; e < kGridSize; ++e)
      result.estimates(static_cast<Eigen::Index>(r), e) = vals[e];

    if (scenario.n_boot == 0) return;
    std::array<std::vector<double>, kGridSize> boots;
    for (long long bsample = 0; bsample < scenario.n_boot; ++bsample) {
      const auto bs = static_cast<std::uint64_t>(bsample);
      Rng bv(derive_seed(scenario.seed, rep, bs, stream::boot_validation));
      Rng br(derive_seed(scenario.seed, rep, bs, stream::boot_rwd));
      std::array<double, kGridSize> bvals;
      bvals.fill(kNaN);
      try {
        std::vector<Eigen::Index> vi(static_cast<std::size_t>(validation.n()));
        for (auto& v : vi)
          v = static_cast<Eigen::Index>(
              bv.below(static_cast<std::uint64_t>(validation.n())));
        std::vector<Eigen::Index> ri(static_cast<std::size_t>(rwd.n()));
        for (auto& v : ri)
          v = static_cast<Eigen::Index>(br.below(static_cast<std::uint64_t>(rwd.n())));
        bvals = grid_values(resample_rows(validation, vi), resample_rows(rwd, ri), cfg);
      } catch (const Error&) {
        // whole resample unusable (e.g. a single-class draw); all-NaN row
      }
      for (int e = 0; e < kGridSize; ++e)
        if (std::isfinite(bvals[e])) boots[static_cast<std::size_t>(e)].push_back(bvals[e]);
    }
    for (int e = 0; e < kGridSize; ++e) {
      const auto& bs = boots[static_cast<std::size_t>(e)];
      const auto failed = scenario.n_boot - static_cast<long long>(bs.size());
      if (!cfg.want[static_cast<std::size_t>(e)] || bs.size() < 2 ||
          failed * 20 > scenario.n_boot)
        continue;  // no usable SE for this estimator in this replication
      KahanSum sum;
      for (double v : bs) sum.add(v);
      const double mean = sum.value() / static_cast<double>(bs.size());
      KahanSum ss;
      for (double v : bs) ss.add((v - mean) * (v - mean));
      result.boot_se(static_cast<Eigen::Index>(r), e) =
          std::sqrt(ss.value() / (static_cast<double>(bs.size()) - 1.0));
    }
  });

  // Deterministic metric fold over replicate index.
  const double tau0 = result.oracle.tau0;
  for (int e = 0; e < kGridSize; ++e) {
    if (!cfg.want[static_cast<std::size_t>(e)]) continue;
    MetricsRow row;
    row.estimator = result.estimator_names[static_cast<std::size_t>(e)];
    KahanSum sum, sq_err;
    long long used = 0;
    for (Eigen::Index r = 0; r < n_reps; ++r) {
      const double v = result.estimates(r, e);
      if (!std::isfinite(v)) continue;
      ++used;
      sum.add(v);
      sq_err.add((v - tau0) * (v - tau0));
    }
    row.n_reps_used = used;
    row.n_failed = scenario.n_reps - used;
    if (used == 0) {
      row.relative_bias_pct = row.bias_over_se = row.rmse = row.mc_mean = row.mc_sd =
          row.coverage = row.mean_boot_se = kNaN;
      result.rows.push_back(row);
      continue;
    }
    row.mc_mean = sum.value() / static_cast<double>(used);
    row.rmse = std::sqrt(sq_err.value() / static_cast<double>(used));
    KahanSum ss;
    for (Eigen::Index r = 0; r < n_reps; ++r) {
      const double v = result.estimates(r, e);
      if (std::isfinite(v)) ss.add((v - row.mc_mean) * (v - row.mc_mean));
    }
    row.mc_sd = used > 1 ? std::sqrt(ss.value() / static_cast<double>(used - 1)) : kNaN;
    row.relative_bias_pct = 100.0 * (row.mc_mean - tau0) / tau0;
    row.bias_over_se = (row.mc_mean - tau0) / row.mc_sd;
    long long covered = 0, with_se = 0;
    KahanSum se_sum;
    for (Eigen::Index r = 0; r < n_reps; ++r) {
      const double v = result.estimates(r, e);
      const double se = result.boot_se(r, e);
      if (!std::isfinite(v) || !std::isfinite(se)) continue;
      ++with_se;
      se_sum.add(se);
      if (std::abs(v - tau0) <= 1.96 * se) ++covered;
    }
    row.coverage = with_se > 0
                       ? static_cast<double>(covered) / static_cast<double>(with_se)
                       : kNaN;
    row.mean_boot_se = with_se > 0 ? se_sum.value() / static_cast<double>(with_se) : kNaN;
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace aucshift
