#include "aucshift/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace aucshift {

using nlohmann::json;

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::BadConfig, "cannot open '" + tmp + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) {
      std::remove(tmp.c_str());
      fail(ErrorCode::BadConfig, "failed while writing '" + tmp + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(ErrorCode::BadConfig, "cannot move output into place at '" + path + "'");
  }
}

namespace {

json report_to_json(const EstimateReport& r) {
  return json{{"estimator", r.estimator},
              {"point", r.point},
              {"se", r.se},
              {"ci_low", r.ci_low},
              {"ci_high", r.ci_high},
              {"n_boot", r.n_boot},
              {"n_boot_failed", r.n_boot_failed},
              {"seed", r.seed},
              {"reliable", r.reliable}};
}

std::string format_cell(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed_or_dash(double v, int width, int precision) {
  char buf[48];
  if (std::isfinite(v))
    std::snprintf(buf, sizeof buf, "%*.*f", width, precision, v);
  else
    std::snprintf(buf, sizeof buf, "%*s", width, "--");
  return buf;
}

}  // namespace

std::string estimate_records_json(const std::vector<EstimateRecord>& records) {
  json out;
  out["command"] = "estimate";
  json arr = json::array();
  for (const EstimateRecord& rec : records) {
    json r = report_to_json(rec.report);
    r["value"] = rec.point.value;
    r["numerator"] = rec.point.numerator;
    r["denominator"] = rec.point.denominator;
    r["effective_pairs"] = rec.point.effective_pairs;
    r["ci"] = rec.ci_kind;
    r["diagnostics"] = json(rec.diagnostics);
    arr.push_back(std::move(r));
  }
  out["reports"] = std::move(arr);
  return out.dump(2) + "\n";
}

std::string comparison_json(const ComparisonReport& report, const std::string& ci_kind) {
  json out;
  out["command"] = "compare";
  out["benchmark"] = to_string(report.benchmark);
  out["ci"] = ci_kind;
  out["auc_a"] = report_to_json(report.auc_a);
  out["auc_b"] = report_to_json(report.auc_b);
  out["difference"] = report_to_json(report.difference);
  return out.dump(2) + "\n";
}

std::string scenario_json(const ScenarioResult& result) {
  const ScenarioSpec& sc = result.scenario;
  json out;
  out["command"] = "simulate";
  out["shift"] = to_string(sc.shift);
  out["spec_cell"] = to_string(sc.spec_cell);
  out["wrong_form"] = to_string(sc.wrong_form);
  out["n_reps"] = sc.n_reps;
  out["n_boot"] = sc.n_boot;
  out["seed"] = sc.seed;
  out["oracle_size"] = sc.oracle_size;
  out["dgp"] = json{{"N_pop", sc.dgp.N_pop},
                    {"n_val", sc.dgp.n_val},
                    {"m_rwd", sc.dgp.m_rwd},
                    {"noise_sd", sc.dgp.noise_sd}};
  out["tau0"] = result.oracle.tau0;
  out["tau0_half_width"] = result.oracle.half_width;
  json rows = json::array();
  for (const MetricsRow& row : result.rows) {
    rows.push_back(json{{"estimator", row.estimator},
                        {"relative_bias_pct", row.relative_bias_pct},
                        {"bias_over_se", row.bias_over_se},
                        {"rmse", row.rmse},
                        {"coverage", row.coverage},
                        {"mc_mean", row.mc_mean},
                        {"mc_sd", row.mc_sd},
                        {"mean_boot_se", row.mean_boot_se},
                        {"n_failed", row.n_failed},
                        {"n_reps_used", row.n_reps_used}});
  }
  out["metrics"] = std::move(rows);
  return out.dump(2) + "\n";
}

std::string scenario_reps_csv(const ScenarioResult& result) {
  std::string out = "rep";
  std::vector<int> cols;
  for (int e = 0; e < static_cast<int>(result.estimator_names.size()); ++e) {
    // Only estimators that ran appear; skipped columns are all-NaN with a
    // matching all-NaN SE column.
    bool any = false;
    for (Eigen::Index r = 0; r < result.estimates.rows() && !any; ++r)
      any = std::isfinite(result.estimates(r, e));
    if (any || result.scenario.estimators.empty()) cols.push_back(e);
  }
  for (int e : cols) out += "," + result.estimator_names[static_cast<std::size_t>(e)];
  if (result.scenario.n_boot > 0)
    for (int e : cols)
      out += ",se_" + result.estimator_names[static_cast<std::size_t>(e)];
  out += "\n";
  for (Eigen::Index r = 0; r < result.estimates.rows(); ++r) {
    out += std::to_string(r);
    for (int e : cols) out += "," + format_cell(result.estimates(r, e));
    if (result.scenario.n_boot > 0)
      for (int e : cols) out += "," + format_cell(result.boot_se(r, e));
    out += "\n";
  }
  return out;
}

std::string scenario_table(const ScenarioResult& result) {
  const ScenarioSpec& sc = result.scenario;
  char head[256];
  std::snprintf(head, sizeof head,
                "shift=%s cell=%s reps=%lld boot=%lld seed=%llu\n"
                "tau0 = %.5f (half-width %.5f, %lld oracle rows)\n",
                to_string(sc.shift), to_string(sc.spec_cell),
                static_cast<long long>(sc.n_reps), static_cast<long long>(sc.n_boot),
                static_cast<unsigned long long>(sc.seed), result.oracle.tau0,
                result.oracle.half_width,
                static_cast<long long>(result.oracle.sample_size));
  std::string out = head;
  char hdr[160];
  std::snprintf(hdr, sizeof hdr, "%-8s %9s %8s %8s %9s %9s %8s %7s\n", "estimator",
                "rel.bias%", "bias/SE", "RMSE", "coverage", "MC.mean", "MC.SD",
                "n_fail");
  out += hdr;
  for (const MetricsRow& row : result.rows) {
    char line[200];
    std::snprintf(line, sizeof line, "%-8s %s %s %s %s %s %s %7lld\n",
                  row.estimator.c_str(),
                  fixed_or_dash(row.relative_bias_pct, 9, 3).c_str(),
                  fixed_or_dash(row.bias_over_se, 8, 3).c_str(),
                  fixed_or_dash(row.rmse, 8, 4).c_str(),
                  fixed_or_dash(row.coverage, 9, 3).c_str(),
                  fixed_or_dash(row.mc_mean, 9, 4).c_str(),
                  fixed_or_dash(row.mc_sd, 8, 4).c_str(),
                  static_cast<long long>(row.n_failed));
    out += line;
  }
  return out;
}

std::string error_json(const Error& error) {
  json out;
  out["error"] =
      json{{"code", to_string(error.code())},
           {"message", error.what()},
           {"exit_code", is_input_error(error.code()) ? 2 : 3}};
  return out.dump(2) + "\n";
}

}  // namespace aucshift
