#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "aucshift/cohort.hpp"
#include "aucshift/error.hpp"

namespace aucshift {

// Calibration function g(X). Feature order is frozen: main effects in column
// order, then squares of continuous columns in column order, then pairwise
// interactions in lexicographic (i<j) order — so multiplier vectors are
// comparable across runs.
struct FeatureMap {
  enum class Kind { g1_moments, g2_moments_interactions, custom };

  struct Term {
    enum class Type { main, square, interaction };
    Type type = Type::main;
    int i = 0;
    int j = 0;  // second column, interaction terms only

    static Term main(int i) { return {Type::main, i, 0}; }
    static Term square(int i) { return {Type::square, i, 0}; }
    static Term interaction(int i, int j) { return {Type::interaction, i, j}; }
  };

  Kind kind = Kind::g1_moments;
  int p = 0;                        // covariate count
  std::vector<bool> continuous_mask;  // squares only for continuous columns
  std::vector<Term> terms;

  int q() const { return static_cast<int>(terms.size()); }

  static FeatureMap g1(int p, std::vector<bool> continuous_mask = {});
  static FeatureMap g2(int p, std::vector<bool> continuous_mask = {});
  static FeatureMap custom(int p, std::vector<Term> terms);

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x_row) const;
  Eigen::MatrixXd apply_matrix(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  // Human-readable term label over the given column names (diagnostics).
  std::string term_label(const Term& t, const std::vector<std::string>& names) const;
};

enum class MomentSource { rwd_empirical, design_weighted, user_summary };

struct TargetMoments {
  Eigen::VectorXd g_tilde;
  MomentSource source = MomentSource::rwd_empirical;
  FeatureMap map;
};

// Design-weighted mean of g over the cohort's rows; the plain empirical mean
// under unit weights.
TargetMoments target_moments_from_cohort(const FeatureMap& map, const Cohort& target);

// Builds g_tilde from published summaries: second moments as variance+mean²,
// interaction means taken verbatim in the map's interaction-term order.
TargetMoments target_moments_from_summary(
    const FeatureMap& map, const Eigen::VectorXd& means,
    const std::optional<Eigen::VectorXd>& variances,
    const std::optional<Eigen::VectorXd>& interaction_means);

}  // namespace aucshift
