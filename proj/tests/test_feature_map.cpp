#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "aucshift/cohort.hpp"
#include "aucshift/error.hpp"
#include "aucshift/feature_map.hpp"

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

bool has_term(const FeatureMap& m, FeatureMap::Term::Type type, int i, int j = 0) {
  for (const auto& t : m.terms)
    if (t.type == type && t.i == i && t.j == j) return true;
  return false;
}

}  // namespace

TEST_CASE("g1 holds mains plus squares of continuous columns") {
  const FeatureMap m = FeatureMap::g1(3);
  CHECK(m.q() == 6);
  for (int i = 0; i < 3; ++i) {
    CHECK(has_term(m, FeatureMap::Term::Type::main, i));
    CHECK(has_term(m, FeatureMap::Term::Type::square, i));
  }

  const FeatureMap masked = FeatureMap::g1(3, {true, false, true});
  CHECK(masked.q() == 5);
  CHECK_FALSE(has_term(masked, FeatureMap::Term::Type::square, 1));
}

TEST_CASE("g2 adds every pairwise interaction") {
  const FeatureMap m = FeatureMap::g2(3);
  CHECK(m.q() == 9);
  CHECK(has_term(m, FeatureMap::Term::Type::interaction, 0, 1));
  CHECK(has_term(m, FeatureMap::Term::Type::interaction, 0, 2));
  CHECK(has_term(m, FeatureMap::Term::Type::interaction, 1, 2));
  // Binary columns lose their square but keep interactions.
  const FeatureMap masked = FeatureMap::g2(3, {false, true, true});
  CHECK(masked.q() == 8);
  CHECK(has_term(masked, FeatureMap::Term::Type::interaction, 0, 1));
}

TEST_CASE("apply computes the documented features") {
  const FeatureMap m = FeatureMap::g2(2);
  Eigen::VectorXd x(2);
  x << 3.0, -2.0;
  const Eigen::VectorXd g = m.apply(x);
  REQUIRE(g.size() == 5);
  // Order: mains, squares, interactions.
  CHECK(g(0) == 3.0);
  CHECK(g(1) == -2.0);
  CHECK(g(2) == 9.0);
  CHECK(g(3) == 4.0);
  CHECK(g(4) == -6.0);
}

TEST_CASE("apply_matrix agrees with row-wise apply") {
  const FeatureMap m = FeatureMap::g2(3, {true, true, false});
  Eigen::MatrixXd x(4, 3);
  x << 1, 2, 3, -1, 0.5, 2, 0, 0, 1, 4, -4, 0.25;
  const Eigen::MatrixXd g = m.apply_matrix(x);
  REQUIRE(g.rows() == 4);
  REQUIRE(g.cols() == m.q());
  for (int r = 0; r < 4; ++r)
    CHECK((g.row(r).transpose() - m.apply(x.row(r))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("custom maps validate their column indices") {
  CHECK_NOTHROW(FeatureMap::custom(3, {FeatureMap::Term::square(2)}));
  CHECK(code_of([] {
          FeatureMap::custom(2, {FeatureMap::Term::main(2)});
        }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] {
          FeatureMap::custom(2, {FeatureMap::Term::interaction(0, 5)});
        }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("cohort moments use design weights") {
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 2.0, 4.0;
  Eigen::VectorXd w(3);
  w << 1.0, 1.0, 2.0;
  const Cohort c =
      make_cohort(x, std::nullopt, std::nullopt, w, Role::target_sample, {"x1"});
  const FeatureMap m = FeatureMap::g1(1);
  const TargetMoments t = target_moments_from_cohort(m, c);
  // Weighted means: x -> (1 + 2 + 2*4)/4, x^2 -> (1 + 4 + 2*16)/4.
  CHECK(t.g_tilde(0) == doctest::Approx(11.0 / 4.0).epsilon(1e-15));
  CHECK(t.g_tilde(1) == doctest::Approx(37.0 / 4.0).epsilon(1e-15));
  CHECK(t.source == MomentSource::design_weighted);
}

TEST_CASE("unweighted cohort moments are plain means") {
  Eigen::MatrixXd x(2, 2);
  x << 1, 10, 3, 30;
  const Cohort c =
      make_cohort(x, std::nullopt, std::nullopt, std::nullopt,
                  Role::target_sample, {"a", "b"});
  const TargetMoments t = target_moments_from_cohort(FeatureMap::g2(2), c);
  CHECK(t.g_tilde(0) == 2.0);                       // mean a
  CHECK(t.g_tilde(1) == 20.0);                      // mean b
  CHECK(t.g_tilde(2) == 5.0);                       // mean a^2
  CHECK(t.g_tilde(3) == 500.0);                     // mean b^2
  CHECK(t.g_tilde(4) == doctest::Approx(50.0));     // mean a*b
  CHECK(t.source == MomentSource::rwd_empirical);
}

TEST_CASE("summary moments reconstruct second moments from variances") {
  const FeatureMap m = FeatureMap::g2(2);
  Eigen::VectorXd means(2), vars(2), inter(1);
  means << 1.0, -2.0;
  vars << 0.25, 4.0;
  inter << -1.3;
  const TargetMoments t = target_moments_from_summary(m, means, vars, inter);
  CHECK(t.g_tilde(0) == 1.0);
  CHECK(t.g_tilde(1) == -2.0);
  CHECK(t.g_tilde(2) == doctest::Approx(1.25).epsilon(1e-15));  // var + mean^2
  CHECK(t.g_tilde(3) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(t.g_tilde(4) == -1.3);
  CHECK(t.source == MomentSource::user_summary);
}

TEST_CASE("summary moments demand what the map uses") {
  const FeatureMap g2 = FeatureMap::g2(2);
  Eigen::VectorXd means(2);
  means << 0.0, 1.0;
  SUBCASE("squares need variances") {
    CHECK(code_of([&] {
            target_moments_from_summary(g2, means, std::nullopt, std::nullopt);
          }) == ErrorCode::MissingSummary);
  }
  SUBCASE("interactions need interaction means") {
    Eigen::VectorXd vars(2);
    vars << 1.0, 1.0;
    CHECK(code_of([&] {
            target_moments_from_summary(g2, means, vars, std::nullopt);
          }) == ErrorCode::MissingSummary);
  }
  SUBCASE("mains-only maps need means only") {
    const FeatureMap mains = FeatureMap::custom(
        2, {FeatureMap::Term::main(0), FeatureMap::Term::main(1)});
    CHECK_NOTHROW(
        target_moments_from_summary(mains, means, std::nullopt, std::nullopt));
  }
  SUBCASE("wrong lengths") {
    Eigen::VectorXd one(1);
    one << 0.0;
    CHECK(code_of([&] {
            target_moments_from_summary(g2, one, std::nullopt, std::nullopt);
          }) == ErrorCode::DimensionMismatch);
  }
  SUBCASE("non-finite moments") {
    Eigen::VectorXd vars(2), inter(1);
    vars << 1.0, std::numeric_limits<double>::infinity();
    inter << 0.0;
    CHECK(code_of([&] {
            target_moments_from_summary(g2, means, vars, inter);
          }) == ErrorCode::BadValue);
  }
}

TEST_CASE("summary moments with unbiased-free variances match patient data") {
  // Population (ddof=0) variances plus raw product means reproduce the
  // empirical feature means exactly, so the two target paths coincide.
  Eigen::MatrixXd x(5, 2);
  x << 0.3, 1.2, -0.7, 0.4, 1.5, -0.2, 0.1, 0.9, -1.1, 2.0;
  const Cohort c =
      make_cohort(x, std::nullopt, std::nullopt, std::nullopt,
                  Role::target_sample, {"a", "b"});
  const FeatureMap m = FeatureMap::g2(2);
  const TargetMoments empirical = target_moments_from_cohort(m, c);

  Eigen::VectorXd means(2), vars(2), inter(1);
  for (int j = 0; j < 2; ++j) {
    means(j) = x.col(j).mean();
    vars(j) = (x.col(j).array() - means(j)).square().mean();
  }
  inter << (x.col(0).array() * x.col(1).array()).mean();
  const TargetMoments summary = target_moments_from_summary(m, means, vars, inter);
  CHECK((summary.g_tilde - empirical.g_tilde).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("term labels are readable") {
  const FeatureMap m = FeatureMap::g2(2);
  const std::vector<std::string> names{"age", "sex"};
  CHECK(m.term_label(FeatureMap::Term::main(0), names) == "age");
  CHECK(m.term_label(FeatureMap::Term::square(1), names) == "sex^2");
  CHECK(m.term_label(FeatureMap::Term::interaction(0, 1), names) == "age:sex");
}
