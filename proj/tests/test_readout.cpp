#include <qrc/readout.hpp>

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <random>

namespace qrc {
namespace {

// Deterministic stand-in values keyed on the observable identity.
double fake_value(int group, int i, int j, int term) {
  return std::sin(1.3 * group + 0.7 * i + 0.31 * j + 0.113 * term + 0.05);
}

// Raw observables laid out by plain enumeration: sites, then pairs i<j, then
// ordered pairs i!=j, with the axis / mixed term varying fastest.
RawObservables enumerated_raw(int n) {
  RawObservables raw;
  raw.n_qubits = n;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) raw.single.push_back(fake_value(0, i, 0, a));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int a = 0; a < 3; ++a) raw.two_same.push_back(fake_value(1, i, j, a));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j)
        for (int t = 0; t < 3; ++t) raw.two_mixed.push_back(fake_value(2, i, j, t));
  return raw;
}

// Exponent triples of the ten monomials per triplet.
constexpr int kExponents[10][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, 0, 0}, {0, 2, 0},
                                   {0, 0, 2}, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}};

void push_monomials(std::vector<double>& out, double a, double b, double c) {
  for (const auto& e : kExponents) out.push_back(std::pow(a, e[0]) * std::pow(b, e[1]) * std::pow(c, e[2]));
}

TEST(Features, ArityForSixQubits) {
  EXPECT_EQ(feature_count(FeatureKind::single, 6), 61u);
  EXPECT_EQ(feature_count(FeatureKind::two, 6), 451u);
  const auto raw = enumerated_raw(6);
  EXPECT_EQ(features_single(raw).values.size(), 61u);
  EXPECT_EQ(features_two(raw).values.size(), 451u);
}

TEST(Features, ArityAcrossSizes) {
  for (int n = 2; n <= 8; ++n) {
    const auto raw = enumerated_raw(n);
    std::size_t pairs = 0, ordered = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i < j) ++pairs;
        if (i != j) ++ordered;
      }
    EXPECT_EQ(features_single(raw).values.size(), 1 + 10 * static_cast<std::size_t>(n));
    EXPECT_EQ(features_two(raw).values.size(), 1 + 10 * pairs + 10 * ordered);
    EXPECT_EQ(feature_count(FeatureKind::two, n), 1 + 10 * pairs + 10 * ordered);
  }
}

TEST(Features, MatchMonomialEnumeration) {
  for (int n : {2, 3, 6}) {
    std::vector<double> single{1.0}, two{1.0};
    for (int i = 0; i < n; ++i)
      push_monomials(single, fake_value(0, i, 0, 0), fake_value(0, i, 0, 1), fake_value(0, i, 0, 2));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        push_monomials(two, fake_value(1, i, j, 0), fake_value(1, i, j, 1), fake_value(1, i, j, 2));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) push_monomials(two, fake_value(2, i, j, 0), fake_value(2, i, j, 1), fake_value(2, i, j, 2));
    const auto raw = enumerated_raw(n);
    const auto got_single = features_single(raw).values;
    const auto got_two = features_two(raw).values;
    ASSERT_EQ(got_single.size(), single.size());
    ASSERT_EQ(got_two.size(), two.size());
    for (std::size_t k = 0; k < single.size(); ++k) EXPECT_NEAR(got_single[k], single[k], 1e-15);
    for (std::size_t k = 0; k < two.size(); ++k) EXPECT_NEAR(got_two[k], two[k], 1e-15);
  }
}

TEST(Features, ZeroAndUnitInputs) {
  auto raw = enumerated_raw(3);
  for (auto* v : {&raw.single, &raw.two_same, &raw.two_mixed}) std::fill(v->begin(), v->end(), 0.0);
  auto f = features_two(raw).values;
  EXPECT_EQ(f[0], 1.0);
  EXPECT_TRUE(std::all_of(f.begin() + 1, f.end(), [](double x) { return x == 0.0; }));
  for (auto* v : {&raw.single, &raw.two_same, &raw.two_mixed}) std::fill(v->begin(), v->end(), 1.0);
  f = features_single(raw).values;
  EXPECT_TRUE(std::all_of(f.begin(), f.end(), [](double x) { return x == 1.0; }));
}

TEST(Features, WrongArity) {
  auto raw = enumerated_raw(3);
  raw.two_mixed.pop_back();
  try {
    (void)features_two(raw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::wrong_arity);
  }
  raw.single.pop_back();
  EXPECT_THROW((void)features_single(raw), Error);
}

Eigen::MatrixXd random_design(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd f(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    f(r, 0) = 1.0;
    for (Eigen::Index c = 1; c < cols; ++c) f(r, c) = g(rng);
  }
  return f;
}

TEST(Fit, RecoversPlantedWeights) {
  std::mt19937_64 rng(1);
  const auto f = random_design(200, 20, rng);
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(20, -1.0, 2.0);
  const Eigen::VectorXd got = fit(f, f * w);
  EXPECT_LE((got - w).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fit, ConstantTargetsLoadOnlyTheBias) {
  std::mt19937_64 rng(2);
  const auto f = random_design(50, 6, rng);
  const Eigen::VectorXd got = fit(f, Eigen::VectorXd::Constant(50, 3.5));
  EXPECT_NEAR(got(0), 3.5, 1e-10);
  EXPECT_LE(got.tail(5).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fit, RankDeficientGivesMinimumNorm) {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd f = random_design(40, 6, rng);
  f.col(4) = f.col(3);
  std::normal_distribution<double> g;
  Eigen::VectorXd y(40);
  for (auto& v : y) v = g(rng);
  const Eigen::VectorXd got = fit(f, y);
  const Eigen::VectorXd pinv = f.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
  EXPECT_LE((got - pinv).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(got(3), got(4), 1e-10);
}

TEST(Fit, ResidualIsLocallyMinimal) {
  std::mt19937_64 rng(4);
  const auto f = random_design(80, 8, rng);
  std::normal_distribution<double> g;
  Eigen::VectorXd y(80);
  for (auto& v : y) v = g(rng);
  const Eigen::VectorXd w = fit(f, y);
  const double best = (y - f * w).squaredNorm();
  for (Eigen::Index c = 0; c < 8; ++c)
    for (double eps : {1e-4, -1e-4}) {
      Eigen::VectorXd p = w;
      p(c) += eps;
      EXPECT_GT((y - f * p).squaredNorm(), best);
    }
}

TEST(Fit, RidgeMatchesNormalEquations) {
  std::mt19937_64 rng(5);
  const auto f = random_design(60, 7, rng);
  std::normal_distribution<double> g;
  Eigen::VectorXd y(60);
  for (auto& v : y) v = g(rng);
  const double lambda = 0.3;
  Eigen::MatrixXd lhs = f.transpose() * f;
  for (Eigen::Index c = 1; c < 7; ++c) lhs(c, c) += lambda;
  const Eigen::VectorXd want = lhs.ldlt().solve(f.transpose() * y);
  EXPECT_LE((fit(f, y, lambda) - want).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fit, InputErrors) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Ones(3, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
  auto code_of = [](auto&& call) {
    try {
      call();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  EXPECT_EQ(code_of([&] { (void)fit(f, Eigen::VectorXd::Ones(2)); }), Errc::shape_mismatch);
  EXPECT_EQ(code_of([&] { (void)fit(f, y, -1.0); }), Errc::invalid_config);
  f(1, 1) = std::nan("");
  EXPECT_EQ(code_of([&] { (void)fit(f, y); }), Errc::non_finite_input);
  EXPECT_EQ(code_of([&] { (void)fit(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)); }), Errc::empty_dataset);
}

TEST(Predict, DotProductAndChecks) {
  LinearModel m{FeatureKind::single, {0.5, 2.0, -1.0}, 1.0, "abc", 0.0};
  EXPECT_DOUBLE_EQ(predict(m, {FeatureKind::single, {1.0, 3.0, 4.0}}), 0.5 + 6.0 - 4.0);
  try {
    (void)predict(m, {FeatureKind::two, {1.0, 3.0, 4.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kind_mismatch);
  }
  try {
    (void)predict(m, {FeatureKind::single, {1.0, 3.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::wrong_arity);
  }
}

TEST(Model, JsonRoundTrip) {
  LinearModel m{FeatureKind::two, {0.1, -0.25, 1e-300}, 3.5, "deadbeef", 0.0};
  const nlohmann::json j = m;
  const auto back = j.get<LinearModel>();
  EXPECT_EQ(back.kind, m.kind);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.v_max, m.v_max);
  EXPECT_EQ(back.config_fingerprint, m.config_fingerprint);
  nlohmann::json bad = j;
  bad["feature_order"] = "something-else";
  EXPECT_THROW((void)bad.get<LinearModel>(), Error);
}

TEST(Evaluate, SmallExample) {
  const std::vector<double> targets{0.0, 2.0}, predictions{1.0, 1.0};
  const auto r = evaluate(predictions, targets);
  // predicting the mean of both targets: residual and total sums are both 2
  EXPECT_DOUBLE_EQ(r.mae, 1.0);
  EXPECT_DOUBLE_EQ(r.r2, 0.0);
  EXPECT_EQ(r.residuals, (std::vector<double>{-1.0, 1.0}));
}

TEST(Evaluate, WorseThanMean) {
  const std::vector<double> targets{0.0, 2.0}, predictions{2.0, 0.0};
  const auto r = evaluate(predictions, targets);
  EXPECT_DOUBLE_EQ(r.mae, 2.0);
  EXPECT_DOUBLE_EQ(r.r2, -3.0);
}

TEST(Evaluate, PerfectPrediction) {
  const std::vector<double> t{1.0, 2.0, 4.0};
  const auto r = evaluate(t, t);
  EXPECT_EQ(r.mae, 0.0);
  EXPECT_EQ(r.r2, 1.0);
}

TEST(Evaluate, AffineInvariance) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<double> t(100), p(100);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = g(rng);
    p[i] = t[i] + 0.3 * g(rng);
  }
  const auto base = evaluate(p, t);
  for (auto& x : t) x = -2.5 * x + 7.0;
  for (auto& x : p) x = -2.5 * x + 7.0;
  const auto moved = evaluate(p, t);
  EXPECT_NEAR(moved.r2, base.r2, 1e-12);
  EXPECT_NEAR(moved.mae, 2.5 * base.mae, 1e-12);
}

TEST(Evaluate, Errors) {
  const std::vector<double> flat{1.0, 1.0, 1.0}, p{0.0, 1.0, 2.0};
  try {
    (void)evaluate(p, flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_targets);
  }
  const std::vector<double> one{1.0};
  EXPECT_THROW((void)evaluate(one, one), Error);
  EXPECT_THROW((void)evaluate(p, one), Error);
}

TEST(Split, PrefixAndSuffix) {
  auto s = split(10000);
  EXPECT_EQ(s.train_size, 7500u);
  EXPECT_EQ(s.test_size, 2500u);
  EXPECT_EQ(s.test_begin(), 7500u);
  s = split(4);
  EXPECT_EQ(s.train_size, 3u);
  EXPECT_EQ(s.test_size, 1u);
  s = split(5, 1.0);
  EXPECT_EQ(s.test_size, 0u);
  EXPECT_TRUE(s.empty_test);
  EXPECT_THROW((void)split(0), Error);
  EXPECT_THROW((void)split(10, 0.0), Error);
  EXPECT_THROW((void)split(10, 1.5), Error);
}

}  // namespace
}  // namespace qrc
