#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aucshift/cohort.hpp"
#include "aucshift/estimators.hpp"
#include "aucshift/rng.hpp"

namespace aucshift {

// Covariate-shift severity of the validation-cohort selection tilt.
enum class Shift { none, moderate, severe };

const char* to_string(Shift shift);
Shift shift_from_string(const std::string& name);

// Selection-model coefficients (alpha_0..alpha_3) for a named shift level.
Eigen::Vector4d shift_alpha(Shift shift);

// Which of the two working models is fit with its correct basis.
enum class SpecCell { both_correct, sm_correct_om_wrong, sm_wrong_om_correct, both_wrong };

const char* to_string(SpecCell cell);
SpecCell spec_cell_from_string(const std::string& name);

// Basis handed to a deliberately misspecified working model. The default
// omits X1 — the covariate driving both the selection tilt and the
// response-arm nonlinearity — leaving main effects of X2 and X3.
enum class WrongForm { omit_x1, mains, x3_only, intercept_only };

const char* to_string(WrongForm form);
WrongForm wrong_form_from_string(const std::string& name);

// Data-generating process. Term orders are fixed:
//   response_coeffs  (5): 1, X1, X2, X2*X3, X3^2        (logit of Pr(D=1))
//   outcome_coeffs   (8): 1, X1, X3, X2*X3, X2^2, D, D*X1^2, D*X1*X3
//   sampling_alpha   (4): 1, X1^2, X2^2, X1*X3          (logit of Pr(S=1))
// Covariates: X1 ~ N(1, 0.5^2), X2 ~ N(-1, 0.5^2), X3 ~ U(0,1).
struct DgpSpec {
  Eigen::VectorXd outcome_coeffs;
  Eigen::VectorXd response_coeffs;
  Eigen::Vector4d sampling_alpha;
  double noise_sd = 0.5;
  long long N_pop = 50000;
  long long n_val = 800;
  long long m_rwd = 8000;

  static DgpSpec defaults();
};

// iid draws from the DGP; x, y, d all populated.
Cohort generate_population(const DgpSpec& dgp, long long size, Rng& rng,
                           Role role = Role::target_sample);

struct TauOracle {
  double tau0 = 0.0;
  double half_width = 0.0;  // MC uncertainty via disjoint-chunk AUC spread
  long long sample_size = 0;
};

// Target-population AUC on a giant fresh sample (stream (seed,0,0,oracle)).
TauOracle true_tau0(const DgpSpec& dgp, long long oracle_size, std::uint64_t seed);

// Draws exactly n_val rows without replacement with inclusion probability
// proportional to logistic(alpha'(1, X1^2, X2^2, X1*X3)) (weighted sequential
// sampling). Returned rows keep population order.
Cohort select_validation(const Cohort& population, const Eigen::Vector4d& alpha,
                         long long n_val, Rng& rng);

struct ScenarioSpec {
  Shift shift = Shift::none;
  SpecCell spec_cell = SpecCell::both_correct;
  long long n_reps = 200;
  long long n_boot = 0;  // 0 disables per-replication bootstrap (no coverage)
  std::uint64_t seed = 0;
  DgpSpec dgp = DgpSpec::defaults();
  WrongForm wrong_form = WrongForm::omit_x1;
  int threads = 0;                      // 0 = all hardware threads
  long long oracle_size = 2000000;
  std::vector<std::string> estimators;  // subset of grid names; empty = all
};

struct MetricsRow {
  std::string estimator;
  double relative_bias_pct = 0.0;  // 100 * (MC mean - tau0) / tau0
  double bias_over_se = 0.0;       // mean bias / MC SD
  double rmse = 0.0;
  double coverage = 0.0;           // NaN when no bootstrap ran
  double mc_mean = 0.0;
  double mc_sd = 0.0;
  double mean_boot_se = 0.0;       // NaN when no bootstrap ran
  long long n_failed = 0;          // replications without a usable estimate
  long long n_reps_used = 0;
};

struct ScenarioResult {
  ScenarioSpec scenario;
  TauOracle oracle;
  std::vector<std::string> estimator_names;  // column order of the matrices
  Eigen::MatrixXd estimates;  // n_reps x n_estimators; NaN = failed
  Eigen::MatrixXd boot_se;    // bootstrap SE per replication; NaN = none/failed
  std::vector<MetricsRow> rows;
};

// Full estimator grid in report order: naive, ipsw, cw_g1, cw_g2, om_g1,
// om_g2, om_rwd, aipsw, acw_g1, acw_g2.
const std::vector<std::string>& estimator_grid();

// One replication: fresh population, biased validation selection, fresh RWD;
// every requested estimator on the shared fits; optional internal bootstrap
// for per-replication SEs; deterministic metric fold over replicate index.
ScenarioResult run_scenario(const ScenarioSpec& scenario);

}  // namespace aucshift
