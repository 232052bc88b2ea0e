#include "aucshift/feature_map.hpp"

namespace aucshift {

namespace {

std::vector<bool> full_mask(int p, std::vector<bool> mask) {
  if (mask.empty()) return std::vector<bool>(static_cast<std::size_t>(p), true);
  if (static_cast<int>(mask.size()) != p)
    fail(ErrorCode::DimensionMismatch, "continuous_mask length must equal covariate count");
  return mask;
}

}  // namespace

FeatureMap FeatureMap::g1(int p, std::vector<bool> continuous_mask) {
  FeatureMap m;
  m.kind = Kind::g1_moments;
  m.p = p;
  m.continuous_mask = full_mask(p, std::move(continuous_mask));
  for (int i = 0; i < p; ++i) m.terms.push_back(Term::main(i));
  for (int i = 0; i < p; ++i)
    if (m.continuous_mask[static_cast<std::size_t>(i)])
      m.terms.push_back(Term::square(i));
  return m;
}

FeatureMap FeatureMap::g2(int p, std::vector<bool> continuous_mask) {
  FeatureMap m = g1(p, std::move(continuous_mask));
  m.kind = Kind::g2_moments_interactions;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) m.terms.push_back(Term::interaction(i, j));
  return m;
}

FeatureMap FeatureMap::custom(int p, std::vector<Term> terms) {
  FeatureMap m;
  m.kind = Kind::custom;
  m.p = p;
  m.continuous_mask = std::vector<bool>(static_cast<std::size_t>(p), true);
  for (const Term& t : terms) {
    bool ok = t.i >= 0 && t.i < p &&
              (t.type != Term::Type::interaction || (t.j >= 0 && t.j < p));
    if (!ok)
      fail(ErrorCode::DimensionMismatch, "custom term references a column outside 0..p-1");
  }
  m.terms = std::move(terms);
  return m;
}

Eigen::VectorXd FeatureMap::apply(const Eigen::Ref<const Eigen::VectorXd>& x_row) const {
  if (x_row.size() != p)
    fail(ErrorCode::DimensionMismatch, "x row length " + std::to_string(x_row.size()) +
                                           " != covariate count " + std::to_string(p));
  Eigen::VectorXd out(q());
  for (int k = 0; k < q(); ++k) {
    const Term& t = terms[static_cast<std::size_t>(k)];
    switch (t.type) {
      case Term::Type::main: out(k) = x_row(t.i); break;
      case Term::Type::square: out(k) = x_row(t.i) * x_row(t.i); break;
      case Term::Type::interaction: out(k) = x_row(t.i) * x_row(t.j); break;
    }
  }
  return out;
}

Eigen::MatrixXd FeatureMap::apply_matrix(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.cols() != p)
    fail(ErrorCode::DimensionMismatch, "x has " + std::to_string(x.cols()) +
                                           " columns, expected " + std::to_string(p));
  Eigen::MatrixXd out(x.rows(), q());
  for (int k = 0; k < q(); ++k) {
    const Term& t = terms[static_cast<std::size_t>(k)];
    switch (t.type) {
      case Term::Type::main: out.col(k) = x.col(t.i); break;
      case Term::Type::square:
        out.col(k) = x.col(t.i).cwiseProduct(x.col(t.i));
        break;
      case Term::Type::interaction:
        out.col(k) = x.col(t.i).cwiseProduct(x.col(t.j));
        break;
    }
  }
  return out;
}

std::string FeatureMap::term_label(const Term& t,
                                   const std::vector<std::string>& names) const {
  auto name = [&](int i) {
    return i < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(i)]
                                              : "x" + std::to_string(i);
  };
  switch (t.type) {
    case Term::Type::main: return name(t.i);
    case Term::Type::square: return name(t.i) + "^2";
    case Term::Type::interaction: return name(t.i) + ":" + name(t.j);
  }
  return "?";
}

TargetMoments target_moments_from_cohort(const FeatureMap& map, const Cohort& target) {
  if (target.n() == 0) fail(ErrorCode::EmptyCohort, "target cohort has no rows");
  const Eigen::MatrixXd g = map.apply_matrix(target.x);
  const Eigen::VectorXd w = target.weights_or_unit();
  TargetMoments tm;
  tm.map = map;
  tm.g_tilde = (g.transpose() * w) / w.sum();
  tm.source = target.design_weight ? MomentSource::design_weighted
                                   : MomentSource::rwd_empirical;
  return tm;
}

TargetMoments target_moments_from_summary(
    const FeatureMap& map, const Eigen::VectorXd& means,
    const std::optional<Eigen::VectorXd>& variances,
    const std::optional<Eigen::VectorXd>& interaction_means) {
  if (means.size() != map.p)
    fail(ErrorCode::DimensionMismatch, "means length must equal covariate count");
  if (variances && variances->size() != map.p)
    fail(ErrorCode::DimensionMismatch, "variances length must equal covariate count");
  int n_inter = 0;
  for (const auto& t : map.terms)
    if (t.type == FeatureMap::Term::Type::interaction) ++n_inter;
  if (interaction_means && interaction_means->size() != n_inter)
    fail(ErrorCode::DimensionMismatch,
         "interaction_means length must equal the map's interaction-term count");

  TargetMoments tm;
  tm.map = map;
  tm.source = MomentSource::user_summary;
  tm.g_tilde.resize(map.q());
  int inter_pos = 0;
  for (int k = 0; k < map.q(); ++k) {
    const auto& t = map.terms[static_cast<std::size_t>(k)];
    switch (t.type) {
      case FeatureMap::Term::Type::main:
        tm.g_tilde(k) = means(t.i);
        break;
      case FeatureMap::Term::Type::square:
        if (!variances)
          fail(ErrorCode::MissingSummary,
               "second moments requested but no variances supplied");
        tm.g_tilde(k) = (*variances)(t.i) + means(t.i) * means(t.i);
        break;
      case FeatureMap::Term::Type::interaction:
        if (!interaction_means)
          fail(ErrorCode::MissingSummary,
               "interaction terms requested but no interaction means supplied");
        tm.g_tilde(k) = (*interaction_means)(inter_pos++);
        break;
    }
  }
  if (!tm.g_tilde.allFinite())
    fail(ErrorCode::BadValue, "target moments contain non-finite entries");
  return tm;
}

}  // namespace aucshift
