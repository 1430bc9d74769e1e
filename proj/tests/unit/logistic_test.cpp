#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "genscale/stats/logistic.hpp"

using namespace genscale;
using namespace genscale::stats;

namespace {

// Root of w = 2c * sigmoid(-w) by bisection; the left side increases and the
// right side decreases in w, so the root is unique.
double bisect_root(double c) {
  auto f = [c](double w) { return w - 2 * c / (1 + std::exp(w)); };
  double lo = 0, hi = 2 * c + 1;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (f(mid) > 0 ? hi : lo) = mid;
  }
  return (lo + hi) / 2;
}

struct Problem {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Problem symmetric_pair() {
  Problem p{Eigen::MatrixXd(2, 1), {0, 1}};
  p.x << -1, 1;
  return p;
}

Problem random_problem(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> z(0, 1);
  Problem p{Eigen::MatrixXd(n, d), std::vector<int>(static_cast<std::size_t>(n))};
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      p.x(i, j) = z(rng);
      s += p.x(i, j);
    }
    p.y[static_cast<std::size_t>(i)] = s + z(rng) > 0 ? 1 : 0;
  }
  p.y[0] = 0;
  p.y[1] = 1;
  return p;
}

}  // namespace

TEST(Logistic, SymmetricPairMatchesBisectionRoot) {
  const auto p = symmetric_pair();
  const auto m = logistic_fit(p.x, p.y, 1.0);
  const double root = bisect_root(1.0);
  EXPECT_TRUE(m.converged);
  EXPECT_NEAR(root, 0.6748, 1e-4);
  EXPECT_NEAR(m.weights(0), root, 1e-6);
  EXPECT_NEAR(m.intercept, 0.0, 1e-9);
}

TEST(Logistic, PredictAtRoot) {
  const auto p = symmetric_pair();
  const auto m = logistic_fit(p.x, p.y, 1.0);
  Eigen::VectorXd x(1);
  x << 1.0;
  EXPECT_NEAR(predict(m, x), 1 / (1 + std::exp(-bisect_root(1.0))), 1e-6);
  EXPECT_NEAR(predict(m, x), 0.6626, 1e-4);
  EXPECT_EQ(predict_class(m, x), 1);
}

TEST(Logistic, PredictTrivialModels) {
  LogisticModel m;
  m.weights = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd x(2);
  x << 3.0, -8.0;
  EXPECT_DOUBLE_EQ(predict(m, x), 0.5);
  EXPECT_EQ(predict_class(m, x), 1);
  EXPECT_THROW(predict(m, Eigen::VectorXd::Zero(3)), Error);
}

TEST(Logistic, StrongRegularizationShrinks) {
  const auto p = symmetric_pair();
  const auto m = logistic_fit(p.x, p.y, 0.001);
  EXPECT_GT(m.weights(0), 0.0);
  EXPECT_LT(m.weights(0), 0.01);
  EXPECT_NEAR(m.weights(0), bisect_root(0.001), 1e-8);
}

TEST(Logistic, LabelFlipNegatesExactly) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    auto p = random_problem(rng, 40, 3);
    std::vector<int> flipped;
    for (int v : p.y) flipped.push_back(1 - v);
    const auto a = logistic_fit(p.x, p.y, 0.5), b = logistic_fit(p.x, flipped, 0.5);
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(a.weights(j), -b.weights(j));
    EXPECT_EQ(a.intercept, -b.intercept);
  }
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 1);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_problem(rng, 30, 2 + t % 3);
    const double c = 0.05 + 0.5 * t;
    Eigen::VectorXd theta(p.x.cols() + 1);
    for (Eigen::Index j = 0; j < theta.size(); ++j) theta(j) = z(rng);
    const auto g = logistic_gradient(p.x, p.y, c, theta);
    Eigen::VectorXd fd(theta.size());
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      Eigen::VectorXd plus = theta, minus = theta;
      plus(j) += h;
      minus(j) -= h;
      fd(j) = (logistic_objective(p.x, p.y, c, plus) - logistic_objective(p.x, p.y, c, minus)) / (2 * h);
    }
    EXPECT_LT((g - fd).norm() / std::max(1.0, g.norm()), 1e-5);
  }
}

TEST(Logistic, ObjectiveNeverIncreases) {
  std::mt19937_64 rng(4);
  const auto p = random_problem(rng, 60, 2);
  std::vector<double> trace;
  FitOptions opt;
  opt.objective_trace = &trace;
  const auto m = logistic_fit(p.x, p.y, 10.0, opt);
  EXPECT_TRUE(m.converged);
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
  EXPECT_LT(m.gradient_max_norm, 1e-8);
}

TEST(Logistic, IterationCapReportsNonConvergence) {
  std::mt19937_64 rng(5);
  const auto p = random_problem(rng, 50, 2);
  FitOptions opt;
  opt.max_iterations = 1;
  const auto m = logistic_fit(p.x, p.y, 1.0, opt);
  EXPECT_FALSE(m.converged);
  EXPECT_EQ(m.iterations, 1);
}

TEST(Logistic, SeparableDataStaysFiniteUnderRegularization) {
  Eigen::MatrixXd x(6, 1);
  x << -3, -2, -1, 1, 2, 3;
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const auto m = logistic_fit(x, y, 10.0);
  EXPECT_TRUE(m.converged);
  EXPECT_TRUE(std::isfinite(m.weights(0)));
  EXPECT_GT(m.weights(0), 0);
}

TEST(Logistic, InputErrors) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  EXPECT_THROW(logistic_fit(x, std::vector<int>{1, 1, 1}, 1.0), Error);
  EXPECT_THROW(logistic_fit(x, std::vector<int>{0, 1, 1}, 0.0), Error);
  x(1, 0) = NAN;
  EXPECT_THROW(logistic_fit(x, std::vector<int>{0, 1, 1}, 1.0), Error);
}

TEST(Logistic, NumericallyStableHelpers) {
  EXPECT_DOUBLE_EQ(sigmoid(0), 0.5);
  EXPECT_GE(sigmoid(-800), 0.0);
  EXPECT_LT(sigmoid(-800), 1e-300);
  EXPECT_DOUBLE_EQ(sigmoid(800), 1.0);
  EXPECT_NEAR(softplus(-800), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(softplus(800), 800.0);
  EXPECT_NEAR(softplus(0), std::log(2.0), 1e-15);
}
