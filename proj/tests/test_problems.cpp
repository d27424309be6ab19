#include "inexact/harness/experiment.hpp"
#include "inexact/problems.hpp"
#include "reference.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <memory>
#include <random>
#include <sstream>

using namespace inexact;

TEST(BallSum, ValueAndSubgradientExamples) {
  BallSumProblem p{{make_vector({2, 0})}, 1.0, FeasibleSet::unit_ball(2), std::nullopt};
  EXPECT_EQ(fts_value(p, make_vector({0, 0})), 1.0);
  EXPECT_EQ(fts_value(p, make_vector({1.5, 0})), 0.0);
  EXPECT_EQ(fts_subgradient(p, make_vector({0, 0})), make_vector({-1, 0}));
  EXPECT_EQ(fts_subgradient(p, make_vector({1.5, 0.2})), Vector::Zero(2));
}

TEST(Covering, Examples) {
  MinMaxBallProblem p{{make_vector({1, 0}), make_vector({-1, 0})}, FeasibleSet::unit_ball(2)};
  EXPECT_EQ(covering_value(p, make_vector({0, 0})), 1.0);
  EXPECT_EQ(covering_value(p, make_vector({1, 0})), 2.0);
  EXPECT_EQ(covering_subgradient(p, make_vector({1, 0})), make_vector({1, 0}));
  EXPECT_EQ(covering_lower_bound(p), 1.0);
}

TEST(Generators, NormConstraintsAndDeterminism) {
  const BallSumProblem t1 = generate_task1(50, 30, 7);
  for (const auto& a : t1.centers) {
    EXPECT_GT(a.norm(), 1.0);
    EXPECT_LT(a.norm(), 1.5);
  }
  const MinMaxBallProblem t2 = generate_task2(50, 30, 7);
  for (const auto& a : t2.points) {
    EXPECT_GT(a.norm(), 0.5);
    EXPECT_LT(a.norm(), 1.0);
  }
  const BallSumProblem again = generate_task1(50, 30, 7);
  for (std::size_t i = 0; i < t1.centers.size(); ++i) EXPECT_EQ(t1.centers[i], again.centers[i]);
  EXPECT_NE(generate_task1(50, 30, 8).centers[0], t1.centers[0]);
}

TEST(Generators, FullScaleConstructsQuickly) {
  const auto start = std::chrono::steady_clock::now();
  const BallSumProblem p = generate_task1(100000, 10, 1);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(p.dim(), 100000);
  EXPECT_LT(s, 1.0);
}

TEST(Generators, SinglePointCoveringHasZeroOptimum) {
  const MinMaxBallProblem p = generate_task2(5, 1, 3);
  EXPECT_EQ(covering_value(p, p.points[0]), 0.0);
  EXPECT_EQ(covering_subgradient(p, p.points[0]), Vector::Zero(5));
}

TEST(Objectives, MidpointConvexity) {
  const BallSumProblem t1 = generate_task1(8, 6, 2);
  const MinMaxBallProblem t2 = generate_task2(8, 6, 2);
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = ref::random_vec(8, rng, 0.8);
    const Vector y = ref::random_vec(8, rng, 0.8);
    const Vector mid = 0.5 * (x + y);
    EXPECT_LE(fts_value(t1, mid), 0.5 * (fts_value(t1, x) + fts_value(t1, y)) + 1e-12);
    EXPECT_LE(covering_value(t2, mid), 0.5 * (covering_value(t2, x) + covering_value(t2, y)) + 1e-12);
  }
}

TEST(PLQuadratic, IdentityAndRankDeficient) {
  const PLQuadratic id = pl_quadratic_make(Matrix::Identity(2, 2), Vector::Zero(2));
  EXPECT_EQ(id.mu, 1.0);
  EXPECT_EQ(id.L, 1.0);
  EXPECT_EQ(id.f_star, 0.0);

  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 1.0;
  const PLQuadratic q = pl_quadratic_make(D, make_vector({0.5, 2.0}));
  EXPECT_EQ(q.mu, 1.0);
  EXPECT_EQ(q.L, 1.0);
  EXPECT_DOUBLE_EQ(q.f_star, 2.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = ref::random_vec(2, rng, 3.0);
    EXPECT_LE(q.value(x) - q.f_star, q.gradient(x).squaredNorm() / (2 * q.mu) + 1e-9);
  }
  EXPECT_THROW(pl_quadratic_make(Matrix::Zero(2, 2), Vector::Zero(2)), std::invalid_argument);
}

TEST(PLQuadratic, RandomInstanceSatisfiesPL) {
  const PLQuadratic q = random_pl_quadratic(20, 50, 20, 100.0, 4);
  EXPECT_NEAR(q.L / q.mu, 100.0, 1e-6);
  // Independent spectrum check via singular values.
  Eigen::JacobiSVD<Matrix> svd(q.A);
  EXPECT_NEAR(svd.singularValues()[0] * svd.singularValues()[0], q.L, 1e-9 * q.L);
  EXPECT_NEAR(svd.singularValues()[19] * svd.singularValues()[19], q.mu, 1e-9 * q.L);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = ref::random_vec(50, rng);
    EXPECT_LE(q.value(x) - q.f_star, q.gradient(x).squaredNorm() / (2 * q.mu) + 1e-9);
  }
}

TEST(Composite, NoneReducesToLinearModel) {
  auto g = std::make_shared<QuadraticOracle>(std::make_shared<PLQuadratic>(centered_quadratic(make_vector({1, 2}))));
  auto c = composite_oracle(g, CompositeTerm::none());
  const Vector x = make_vector({0.3, -0.4}), y = make_vector({1.0, 0.5});
  EXPECT_EQ(c->model(y, x), g->model(y, x));
  EXPECT_EQ(c->model(y, x), g->gradient(x).dot(y - x));
}

TEST(Composite, OneDimensionalModel) {
  auto g = std::make_shared<LambdaOracle>(1, [](const Vector& x) { return 0.5 * x.squaredNorm(); },
                                          [](const Vector& x) { return x; });
  auto c = composite_oracle(g, make_composite_term("l1", 1.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng), y = u(rng);
    EXPECT_DOUBLE_EQ(c->model(make_vector({y}), make_vector({x})), x * (y - x) + std::abs(y) - std::abs(x));
    EXPECT_EQ(c->model(make_vector({x}), make_vector({x})), 0.0);
  }
  EXPECT_THROW(make_composite_term("huber", 1.0), UnsupportedCombination);
}

TEST(Noisy, ZeroNoiseIsExact) {
  auto g = std::make_shared<QuadraticOracle>(std::make_shared<PLQuadratic>(random_pl_quadratic(8, 5, 5, 4.0, 1)));
  NoisyOracle o(g, 0.0, 0.0, NoiseMode::random_sphere, 4);
  const Vector x = Vector::LinSpaced(5, -1, 1);
  EXPECT_EQ(noisy_gradient(o, x), g->gradient(x));
  EXPECT_EQ(o.value(x), g->value(x));
  EXPECT_TRUE(o.info().exact_values);
}

TEST(Noisy, EnvelopesHold) {
  auto g = std::make_shared<QuadraticOracle>(std::make_shared<PLQuadratic>(random_pl_quadratic(8, 5, 5, 4.0, 1)));
  NoisyOracle o(g, 0.1, 0.02, NoiseMode::random_sphere, 4);
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vector x = ref::random_vec(5, rng);
    worst = std::max(worst, (o.gradient(x) - g->gradient(x)).norm());
    const double fd = o.value(x), f = g->value(x);
    EXPECT_LE(fd, f);
    EXPECT_GE(fd, f - 0.02);
  }
  EXPECT_LE(worst, 0.1 * (1 + 1e-12));
  EXPECT_EQ(o.info().gamma, 0.1);
  EXPECT_FALSE(o.info().exact_values);
}

TEST(Noisy, AdversarialHasExactMagnitude) {
  auto g = std::make_shared<QuadraticOracle>(std::make_shared<PLQuadratic>(centered_quadratic(Vector::Zero(3))));
  NoisyOracle o(g, 0.25, 0.0, NoiseMode::adversarial, 0, make_vector({1, 1, 0}));
  const Vector x = make_vector({0.5, -0.25, 2});
  EXPECT_NEAR((o.gradient(x) - g->gradient(x)).norm(), 0.25, 1e-15);
}

TEST(FiniteDiff, Families) {
  auto q = std::make_shared<QuadraticOracle>(std::make_shared<PLQuadratic>(random_pl_quadratic(10, 6, 6, 10.0, 2)));
  std::mt19937_64 rng(8);
  EXPECT_LT(harness::finite_diff_check(*q, ref::random_vec(6, rng), 1e-6), 1e-6);

  auto p = std::make_shared<BallSumProblem>(generate_task1(6, 4, 1));
  BallSumOracle fts(p);
  Vector x = Vector::Zero(6);
  ASSERT_TRUE(harness::is_smooth_point(*p, x, 1e-3));
  EXPECT_LT(harness::finite_diff_check(fts, x, 1e-6), 1e-5);

  LambdaOracle constant(3, [](const Vector&) { return 4.0; }, [](const Vector&) { return Vector::Zero(3); });
  EXPECT_EQ(harness::finite_diff_check(constant, Vector::Ones(3), 1e-6), 0.0);
}

TEST(PointsCsv, RoundTripFullPrecision) {
  const BallSumProblem p = generate_task1(7, 5, 11);
  std::stringstream ss;
  write_points_csv(ss, p.centers);
  const auto back = read_points_csv(ss);
  ASSERT_EQ(back.size(), p.centers.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], p.centers[i]);
  std::stringstream bad("1,2\n3,x\n");
  try {
    read_points_csv(bad);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}
