#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "aucshift/error.hpp"

namespace aucshift {

enum class Role { validation, rwd, target_sample };

const char* to_string(Role role);

// Maps CSV header names onto the cohort fields. x_columns is ordered and
// defines the covariate order everywhere downstream.
struct Schema {
  std::vector<std::string> x_columns;
  std::optional<std::string> y_column;
  std::optional<std::string> d_column;
  std::optional<std::string> weight_column;
};

struct Cohort {
  Eigen::MatrixXd x;                          // n × p covariates
  std::optional<Eigen::VectorXd> y;           // biomarker
  std::optional<Eigen::VectorXd> d;           // response in {0,1}
  std::optional<Eigen::VectorXd> design_weight;  // positive; default unit
  Role role = Role::validation;
  std::vector<std::string> column_names;      // p labels, x order
  std::size_t n_dropped_rows = 0;             // rows excluded for missing cells

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }

  Eigen::VectorXd weights_or_unit() const {
    if (design_weight) return *design_weight;
    return Eigen::VectorXd::Ones(n());
  }
};

// Validates and tags an in-memory cohort (the same checks the loader runs).
Cohort make_cohort(Eigen::MatrixXd x, std::optional<Eigen::VectorXd> y,
                   std::optional<Eigen::VectorXd> d,
                   std::optional<Eigen::VectorXd> design_weight, Role role,
                   std::vector<std::string> column_names);

// Loads a CSV (comma-separated, header row, '.' decimal point). Rows with an
// empty required cell are dropped and counted; any non-empty cell that fails
// to parse raises BadValue with its data-row index (1-based).
Cohort load_cohort(const std::string& path, Role role, const Schema& schema);

// Writes the cohort back to CSV with round-trippable precision.
void write_cohort_csv(const Cohort& cohort, const std::string& path);

// Succeeds iff covariate names match in order; otherwise SchemaMismatch.
void check_compatibility(const Cohort& a, const Cohort& b);

struct CombinedData {
  Cohort validation;
  std::optional<Cohort> rwd;
};

}  // namespace aucshift
