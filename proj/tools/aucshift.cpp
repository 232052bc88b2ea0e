#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aucshift/cohort.hpp"
#include "aucshift/error.hpp"
#include "aucshift/estimators.hpp"
#include "aucshift/feature_map.hpp"
#include "aucshift/inference.hpp"
#include "aucshift/parallel.hpp"
#include "aucshift/report_io.hpp"
#include "aucshift/rng.hpp"
#include "aucshift/simlab.hpp"
#include "aucshift/version.hpp"

namespace {

using namespace aucshift;
using nlohmann::json;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> read_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadValue, "cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::EmptyCohort, "no header row in " + path);
  std::vector<std::string> names;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    names.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return names;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

int column_index(const std::string& name, const std::vector<std::string>& x_names) {
  for (std::size_t i = 0; i < x_names.size(); ++i)
    if (x_names[i] == name) return static_cast<int>(i);
  fail(ErrorCode::BadConfig, "'" + name + "' is not one of the --x columns");
}

// Shared schema / feature-map flags.
struct DataFlags {
  std::vector<std::string> x;
  std::string y = "y";
  std::string d = "d";
  std::vector<std::string> binary;
  std::string feature_map = "g1";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--x", x, "covariate column names, in model order")
        ->delimiter(',')
        ->required();
    cmd->add_option("--y", y, "biomarker column name");
    cmd->add_option("--d", d, "response-indicator column name (values 0/1)");
    cmd->add_option("--binary", binary,
                    "covariate columns treated as binary (no squared term)")
        ->delimiter(',');
    cmd->add_option("--feature-map", feature_map,
                    "calibration moments: g1 (means+variances) or g2 (adds "
                    "pairwise interactions)");
  }

  std::vector<bool> mask() const {
    std::vector<bool> m(x.size(), true);
    for (const std::string& name : binary)
      m[static_cast<std::size_t>(column_index(name, x))] = false;
    return m;
  }

  FeatureMap map() const {
    const int p = static_cast<int>(x.size());
    if (feature_map == "g1") return FeatureMap::g1(p, mask());
    if (feature_map == "g2") return FeatureMap::g2(p, mask());
    fail(ErrorCode::BadConfig, "--feature-map must be g1 or g2");
  }

  FeatureMap::Kind map_kind() const {
    if (feature_map == "g1") return FeatureMap::Kind::g1_moments;
    if (feature_map == "g2") return FeatureMap::Kind::g2_moments_interactions;
    fail(ErrorCode::BadConfig, "--feature-map must be g1 or g2");
  }
};

// Bootstrap / execution flags shared by estimate and compare.
struct RunFlags {
  long long n_boot = 200;
  std::uint64_t seed = 0;
  std::string ci = "normal";
  int threads = 0;
  std::string out;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--n-boot", n_boot, "bootstrap resamples (0 = none)");
    cmd->add_option("--seed", seed, "RNG seed; all randomness derives from it");
    cmd->add_option("--ci", ci, "confidence interval kind: normal or percentile");
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    cmd->add_option("--out", out, "output path (default: stdout)");
  }

  int resolved_threads() const { return threads > 0 ? threads : hardware_threads(); }
};

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_text_atomic(out_path, content);
}

// Config files are key=value lines (# or ; comments) whose keys are the long
// option names of the chosen subcommand. They are merged by injecting
// "--key=value" tokens right after the subcommand, skipping any key that was
// also given as a real flag, so command-line flags always win. Unknown keys
// then fail in the regular parser.
std::vector<std::string> merge_config_args(std::vector<std::string> args) {
  static const std::vector<std::string> kConfigurable = {"estimate", "compare",
                                                         "simulate"};
  std::size_t sub_pos = args.size();
  for (std::size_t i = 0; i < args.size() && sub_pos == args.size(); ++i)
    for (const std::string& name : kConfigurable)
      if (args[i] == name) sub_pos = i;
  if (sub_pos == args.size()) return args;

  std::string path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadConfig, "cannot open config file: " + path);
  auto given_as_flag = [&](const std::string& key) {
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i)
      if (args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0)
        return true;
    return false;
  };
  std::vector<std::string> injected;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::BadConfig, "config line " + std::to_string(line_no) +
                                     " is not key=value: " + t);
    std::string key = trim(t.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    if (key.empty() || value.empty())
      fail(ErrorCode::BadConfig, "config line " + std::to_string(line_no) +
                                     " needs a key and a value");
    if (key == "config")
      fail(ErrorCode::BadConfig, "config files cannot chain to other config files");
    if (given_as_flag(key)) continue;
    if (value.find_first_of(" \t") == std::string::npos) {
      injected.push_back("--" + key + "=" + value);
    } else {  // multi-value options take space-separated pieces
      injected.push_back("--" + key);
      std::istringstream pieces(value);
      std::string piece;
      while (pieces >> piece) injected.push_back(piece);
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1,
              injected.begin(), injected.end());
  return args;
}

std::vector<FeatureMap::Term> parse_terms(const std::vector<std::string>& specs,
                                          const std::vector<std::string>& x_names) {
  std::vector<FeatureMap::Term> terms;
  for (const std::string& s : specs) {
    const auto c1 = s.find(':');
    if (c1 == std::string::npos)
      fail(ErrorCode::BadConfig,
           "term '" + s + "' must look like main:COL, square:COL, or "
                          "interaction:COL:COL");
    const std::string kind = s.substr(0, c1);
    const std::string rest = s.substr(c1 + 1);
    if (kind == "main") {
      terms.push_back(FeatureMap::Term::main(column_index(rest, x_names)));
    } else if (kind == "square") {
      terms.push_back(FeatureMap::Term::square(column_index(rest, x_names)));
    } else if (kind == "interaction") {
      const auto c2 = rest.find(':');
      if (c2 == std::string::npos)
        fail(ErrorCode::BadConfig, "interaction term '" + s + "' needs two columns");
      terms.push_back(
          FeatureMap::Term::interaction(column_index(rest.substr(0, c2), x_names),
                                        column_index(rest.substr(c2 + 1), x_names)));
    } else {
      fail(ErrorCode::BadConfig, "unknown term type '" + kind + "' in '" + s + "'");
    }
  }
  return terms;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadConfig, "cannot open: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    fail(ErrorCode::BadConfig, std::string("cannot parse JSON in ") + path + ": " +
                                   e.what());
  }
}

// Covariate summary file: {"means": {col: value, ...},
//                          "variances": {col: value, ...},       (optional)
//                          "interactions": {"colA:colB": value}} (optional)
TargetMoments parse_target_summary(const std::string& path, const FeatureMap& map,
                                   const std::vector<std::string>& x_names) {
  const json j = load_json_file(path);
  if (!j.is_object())
    fail(ErrorCode::BadConfig, "target summary must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "means" && key != "variances" && key != "interactions")
      fail(ErrorCode::BadConfig, "unknown target-summary key '" + key + "'");

  if (!j.contains("means") || !j["means"].is_object())
    fail(ErrorCode::MissingSummary, "target summary needs a \"means\" object");
  const auto p = x_names.size();
  Eigen::VectorXd means(static_cast<Eigen::Index>(p));
  for (const auto& [key, _] : j["means"].items()) column_index(key, x_names);
  for (std::size_t i = 0; i < p; ++i) {
    if (!j["means"].contains(x_names[i]))
      fail(ErrorCode::MissingSummary, "no mean supplied for column " + x_names[i]);
    means(static_cast<Eigen::Index>(i)) = j["means"][x_names[i]].get<double>();
  }

  std::optional<Eigen::VectorXd> variances;
  if (j.contains("variances")) {
    if (!j["variances"].is_object())
      fail(ErrorCode::BadConfig, "\"variances\" must be an object");
    Eigen::VectorXd v = Eigen::VectorXd::Constant(
        static_cast<Eigen::Index>(p), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [key, val] : j["variances"].items())
      v(column_index(key, x_names)) = val.get<double>();
    for (const auto& t : map.terms)
      if (t.type == FeatureMap::Term::Type::square &&
          !std::isfinite(v(t.i)))
        fail(ErrorCode::MissingSummary,
             "no variance supplied for column " +
                 x_names[static_cast<std::size_t>(t.i)]);
    variances = std::move(v);
  }

  std::optional<Eigen::VectorXd> interactions;
  int n_inter = 0;
  for (const auto& t : map.terms)
    if (t.type == FeatureMap::Term::Type::interaction) ++n_inter;
  if (j.contains("interactions")) {
    if (!j["interactions"].is_object())
      fail(ErrorCode::BadConfig, "\"interactions\" must be an object");
    if (n_inter == 0)
      fail(ErrorCode::BadConfig,
           "interaction means supplied but the " +
               std::string(map.kind == FeatureMap::Kind::g1_moments ? "g1" : "chosen") +
               " map uses none");
    Eigen::VectorXd v(n_inter);
    int pos = 0;
    for (const auto& t : map.terms) {
      if (t.type != FeatureMap::Term::Type::interaction) continue;
      const std::string ab = x_names[static_cast<std::size_t>(t.i)] + ":" +
                             x_names[static_cast<std::size_t>(t.j)];
      const std::string ba = x_names[static_cast<std::size_t>(t.j)] + ":" +
                             x_names[static_cast<std::size_t>(t.i)];
      if (j["interactions"].contains(ab))
        v(pos) = j["interactions"][ab].get<double>();
      else if (j["interactions"].contains(ba))
        v(pos) = j["interactions"][ba].get<double>();
      else
        fail(ErrorCode::MissingSummary, "no interaction mean supplied for " + ab);
      ++pos;
    }
    for (const auto& [key, _] : j["interactions"].items()) {
      const auto c = key.find(':');
      if (c == std::string::npos)
        fail(ErrorCode::BadConfig, "interaction key '" + key + "' must be COL:COL");
      column_index(key.substr(0, c), x_names);
      column_index(key.substr(c + 1), x_names);
    }
    interactions = std::move(v);
  }
  return target_moments_from_summary(map, means, variances, interactions);
}

struct EstimateArgs {
  std::string validation_path, rwd_path, target_summary_path;
  DataFlags data;
  RunFlags run;
  std::vector<std::string> estimators{"naive"};
  std::string ties = "strict";
  std::vector<std::string> om_terms_d1, om_terms_d0;
  std::string rwd_weight;
  std::pair<double, double> truncate{0.1, 99.9};
  bool no_truncate = false;
};

Ties ties_from_string(const std::string& name) {
  if (name == "strict") return Ties::strict;
  if (name == "half") return Ties::half;
  fail(ErrorCode::BadConfig, "--ties must be strict or half");
}

CombinedData load_data(const EstimateArgs& a) {
  Schema vschema;
  vschema.x_columns = a.data.x;
  vschema.y_column = a.data.y;
  vschema.d_column = a.data.d;
  CombinedData data;
  data.validation = load_cohort(a.validation_path, Role::validation, vschema);
  if (!a.rwd_path.empty()) {
    const auto header = read_header(a.rwd_path);
    Schema rschema;
    rschema.x_columns = a.data.x;
    if (contains(header, a.data.y)) rschema.y_column = a.data.y;
    if (contains(header, a.data.d)) rschema.d_column = a.data.d;
    if (!a.rwd_weight.empty()) rschema.weight_column = a.rwd_weight;
    data.rwd = load_cohort(a.rwd_path, Role::rwd, rschema);
  }
  return data;
}

EstimatorSpec build_spec(const EstimateArgs& a, EstimatorTag tag) {
  EstimatorSpec spec;
  spec.tag = tag;
  spec.map_kind = a.data.map_kind();
  spec.continuous_mask = a.data.mask();
  spec.ties = ties_from_string(a.ties);
  if (!a.no_truncate && (tag == EstimatorTag::ipsw || tag == EstimatorTag::aipsw))
    spec.truncation = a.truncate;
  if (!a.om_terms_d1.empty() || !a.om_terms_d0.empty()) {
    if (a.om_terms_d1.empty() || a.om_terms_d0.empty())
      fail(ErrorCode::BadConfig,
           "--om-terms-d1 and --om-terms-d0 must be given together");
    BasisSpec basis;
    basis.terms_d1 = parse_terms(a.om_terms_d1, a.data.x);
    basis.terms_d0 = parse_terms(a.om_terms_d0, a.data.x);
    spec.outcome_basis = basis;
  }
  return spec;
}

int run_estimate(const EstimateArgs& a) {
  const CombinedData data = load_data(a);
  std::optional<TargetMoments> summary;
  if (!a.target_summary_path.empty())
    summary = parse_target_summary(a.target_summary_path, a.data.map(), a.data.x);
  std::vector<EstimateRecord> records;
  for (const std::string& name : a.estimators) {
    const EstimatorSpec spec = build_spec(a, estimator_tag_from_string(name));
    EstimateRecord rec;
    const EstimateDetail detail = estimate_detailed(spec, data, summary);
    rec.point = detail.point;
    rec.diagnostics = detail.diagnostics;
    rec.ci_kind = a.run.ci;
    rec.report =
        bootstrap_estimate(spec, data, summary, a.run.n_boot, a.run.seed,
                           ci_kind_from_string(a.run.ci), a.run.resolved_threads());
    records.push_back(std::move(rec));
  }
  emit(a.run.out, estimate_records_json(records));
  return 0;
}

struct CompareArgs {
  std::string a_path, b_path;
  DataFlags data;
  RunFlags run;
  std::string benchmark = "mixture";
  std::string estimator = "cw";
  std::string ties = "strict";
  std::pair<double, double> truncate{0.1, 99.9};
  bool no_truncate = false;
};

int run_compare(const CompareArgs& a) {
  Schema schema;
  schema.x_columns = a.data.x;
  schema.y_column = a.data.y;
  schema.d_column = a.data.d;
  const Cohort ca = load_cohort(a.a_path, Role::validation, schema);
  const Cohort cb = load_cohort(a.b_path, Role::validation, schema);
  EstimatorSpec spec;
  spec.tag = estimator_tag_from_string(a.estimator);
  spec.map_kind = a.data.map_kind();
  spec.continuous_mask = a.data.mask();
  spec.ties = ties_from_string(a.ties);
  if (!a.no_truncate &&
      (spec.tag == EstimatorTag::ipsw || spec.tag == EstimatorTag::aipsw))
    spec.truncation = a.truncate;
  const ComparisonReport rep =
      compare(ca, cb, benchmark_from_string(a.benchmark), spec, a.run.n_boot,
              a.run.seed, ci_kind_from_string(a.run.ci), a.run.resolved_threads());
  emit(a.run.out, comparison_json(rep, a.run.ci));
  return 0;
}

struct SimulateArgs {
  std::string shift = "none";
  std::string spec_cell = "both_correct";
  std::string wrong_form = "omit_x1";
  long long reps = 200;
  long long boot = 0;
  std::uint64_t seed = 0;
  long long oracle_size = 2000000;
  std::vector<std::string> estimators;
  int threads = 0;
  long long n_pop = 50000, n_val = 800, m_rwd = 8000;
  double noise_sd = 0.5;
  std::string out, dump_reps, table;
};

int run_simulate(const SimulateArgs& a) {
  ScenarioSpec scenario;
  scenario.shift = shift_from_string(a.shift);
  scenario.spec_cell = spec_cell_from_string(a.spec_cell);
  scenario.wrong_form = wrong_form_from_string(a.wrong_form);
  scenario.n_reps = a.reps;
  scenario.n_boot = a.boot;
  scenario.seed = a.seed;
  scenario.oracle_size = a.oracle_size;
  scenario.estimators = a.estimators;
  scenario.threads = a.threads;
  scenario.dgp = DgpSpec::defaults();
  scenario.dgp.N_pop = a.n_pop;
  scenario.dgp.n_val = a.n_val;
  scenario.dgp.m_rwd = a.m_rwd;
  scenario.dgp.noise_sd = a.noise_sd;
  const ScenarioResult result = run_scenario(scenario);
  std::cout << scenario_table(result);
  if (!a.table.empty()) write_text_atomic(a.table, scenario_table(result));
  if (!a.dump_reps.empty()) write_text_atomic(a.dump_reps, scenario_reps_csv(result));
  if (!a.out.empty()) write_text_atomic(a.out, scenario_json(result));
  return 0;
}

struct FixtureArgs {
  std::string shift = "moderate";
  std::uint64_t seed = 0;
  long long n_pop = 50000, n_val = 800, m_rwd = 8000;
  std::string out_validation, out_rwd;
};

int run_fixture(const FixtureArgs& a) {
  DgpSpec dgp = DgpSpec::defaults();
  dgp.N_pop = a.n_pop;
  dgp.n_val = a.n_val;
  dgp.m_rwd = a.m_rwd;
  dgp.sampling_alpha = shift_alpha(shift_from_string(a.shift));
  Rng pop_rng(derive_seed(a.seed, 0, 0, stream::population));
  const Cohort population = generate_population(dgp, dgp.N_pop, pop_rng);
  Rng sel_rng(derive_seed(a.seed, 0, 0, stream::selection));
  const Cohort validation =
      select_validation(population, dgp.sampling_alpha, dgp.n_val, sel_rng);
  Rng rwd_rng(derive_seed(a.seed, 0, 0, stream::rwd));
  const Cohort rwd = generate_population(dgp, dgp.m_rwd, rwd_rng, Role::rwd);
  write_cohort_csv(validation, a.out_validation);
  write_cohort_csv(rwd, a.out_rwd);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AUC estimation under covariate shift: weighted, outcome-model, "
               "and augmented estimators with bootstrap inference"};
  app.set_version_flag("--version", std::string("aucshift ") + kVersion);
  app.require_subcommand(1);

  std::string config_path;  // consumed by merge_config_args before parsing
  const char* config_help = "key=value defaults for this subcommand; flags win";

  EstimateArgs ea;
  CLI::App* est = app.add_subcommand(
      "estimate", "estimate AUC on a validation cohort, generalized to a target");
  est->add_option("--config", config_path, config_help);
  est->add_option("--validation", ea.validation_path, "validation cohort CSV")
      ->required();
  est->add_option("--rwd", ea.rwd_path, "target-population (RWD) CSV");
  ea.data.add_to(est);
  est->add_option("--estimators", ea.estimators,
                  "comma list of: naive, ipsw, cw, om, om_rwd, acw, aipsw")
      ->delimiter(',');
  est->add_option("--target-summary", ea.target_summary_path,
                  "JSON covariate summary standing in for patient-level RWD");
  est->add_option("--rwd-weight", ea.rwd_weight, "design-weight column in the RWD CSV");
  est->add_option("--ties", ea.ties, "tie handling: strict or half");
  est->add_option("--om-terms-d1", ea.om_terms_d1,
                  "outcome-model terms, responders (main:COL, square:COL, "
                  "interaction:COL:COL)")
      ->delimiter(',');
  est->add_option("--om-terms-d0", ea.om_terms_d0,
                  "outcome-model terms, non-responders")
      ->delimiter(',');
  est->add_option("--truncate", ea.truncate,
                  "weight-truncation percentiles for ipsw/aipsw");
  est->add_flag("--no-truncate", ea.no_truncate, "disable weight truncation");
  ea.run.add_to(est);

  CompareArgs ca;
  CLI::App* cmp = app.add_subcommand(
      "compare", "benchmark two cohorts' AUCs against a common population");
  cmp->add_option("--config", config_path, config_help);
  cmp->add_option("--a", ca.a_path, "first cohort CSV")->required();
  cmp->add_option("--b", ca.b_path, "second cohort CSV")->required();
  ca.data.add_to(cmp);
  cmp->add_option("--benchmark", ca.benchmark, "common target: a, b, or mixture");
  cmp->add_option("--estimator", ca.estimator, "estimator used on both sides");
  cmp->add_option("--ties", ca.ties, "tie handling: strict or half");
  cmp->add_option("--truncate", ca.truncate,
                  "weight-truncation percentiles for ipsw/aipsw");
  cmp->add_flag("--no-truncate", ca.no_truncate, "disable weight truncation");
  ca.run.add_to(cmp);

  SimulateArgs sa;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Monte-Carlo replication study with bias/RMSE/coverage metrics");
  sim->add_option("--config", config_path, config_help);
  sim->add_option("--shift", sa.shift, "covariate shift: none, moderate, severe");
  sim->add_option("--spec-cell", sa.spec_cell,
                  "model specification cell: both_correct, sm_correct_om_wrong, "
                  "sm_wrong_om_correct, both_wrong");
  sim->add_option("--wrong-form", sa.wrong_form,
                  "misspecified-model basis: omit_x1, mains, x3_only, "
                  "intercept_only");
  sim->add_option("--reps", sa.reps, "Monte-Carlo replications");
  sim->add_option("--boot", sa.boot, "bootstrap resamples per replication (0 = none)");
  sim->add_option("--seed", sa.seed, "RNG seed (required for reproducibility)")
      ->required();
  sim->add_option("--oracle-size", sa.oracle_size, "target-AUC oracle sample size");
  sim->add_option("--estimators", sa.estimators,
                  "grid subset: naive, ipsw, cw_g1, cw_g2, om_g1, om_g2, om_rwd, "
                  "aipsw, acw_g1, acw_g2")
      ->delimiter(',');
  sim->add_option("--threads", sa.threads, "worker threads (0 = all cores)");
  sim->add_option("--n-pop", sa.n_pop, "finite population size per replication");
  sim->add_option("--n-val", sa.n_val, "validation cohort size");
  sim->add_option("--m-rwd", sa.m_rwd, "RWD sample size");
  sim->add_option("--noise-sd", sa.noise_sd, "biomarker noise SD");
  sim->add_option("--out", sa.out, "metrics JSON path");
  sim->add_option("--dump-reps", sa.dump_reps, "per-replication estimates CSV path");
  sim->add_option("--table", sa.table, "metrics text-table path");

  FixtureArgs fa;
  CLI::App* fix = app.add_subcommand(
      "fixture", "write a simulated validation/RWD CSV pair for testing");
  fix->add_option("--shift", fa.shift, "covariate shift: none, moderate, severe");
  fix->add_option("--seed", fa.seed, "RNG seed")->required();
  fix->add_option("--n-pop", fa.n_pop, "population size");
  fix->add_option("--n-val", fa.n_val, "validation cohort size");
  fix->add_option("--m-rwd", fa.m_rwd, "RWD sample size");
  fix->add_option("--out-validation", fa.out_validation, "validation CSV path")
      ->required();
  fix->add_option("--out-rwd", fa.out_rwd, "RWD CSV path")->required();

  try {
    std::vector<std::string> args =
        merge_config_args(std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());  // CLI11 consumes back-to-front
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const Error err(ErrorCode::BadConfig, e.what());
    std::cerr << error_json(err);
    return 2;
  } catch (const Error& e) {
    std::cerr << error_json(e);
    return is_input_error(e.code()) ? 2 : 3;
  }

  try {
    if (est->parsed()) return run_estimate(ea);
    if (cmp->parsed()) return run_compare(ca);
    if (sim->parsed()) return run_simulate(sa);
    if (fix->parsed()) return run_fixture(fa);
    fail(ErrorCode::BadConfig, "no subcommand given");
  } catch (const Error& e) {
    std::cerr << error_json(e);
    return is_input_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    const Error err(ErrorCode::NumericalBreakdown,
                    std::string("unexpected failure: ") + e.what());
    std::cerr << error_json(err);
    return 3;
  }
}
