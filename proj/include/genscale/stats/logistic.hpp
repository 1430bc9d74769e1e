#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "genscale/error.hpp"

namespace genscale::stats {

struct LogisticModel {
  Eigen::VectorXd weights;
  double intercept = 0;
  double c = 1;
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = 0;
  double objective = 0;
};

inline void to_json(nlohmann::json& j, const LogisticModel& m) {
  j = {{"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())},
       {"intercept", m.intercept},
       {"c", m.c},
       {"converged", m.converged},
       {"iterations", m.iterations},
       {"gradient_max_norm", m.gradient_max_norm}};
}

struct FitOptions {
  double tolerance = 1e-8;  // on the max-norm of the gradient
  int max_iterations = 10000;
  /// When set, receives the objective at the start and after every step.
  std::vector<double>* objective_trace = nullptr;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

namespace detail {

inline void check_problem(const Eigen::MatrixXd& x, std::span<const int> y, double c) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw Error(ErrorCode::invalid_input, "logistic: x rows and y length differ");
  if (x.rows() < 2) throw Error(ErrorCode::invalid_input, "logistic: need at least 2 samples");
  if (!(c > 0) || !std::isfinite(c)) throw Error(ErrorCode::invalid_input, "logistic: C must be positive and finite");
  if (!x.allFinite()) throw Error(ErrorCode::invalid_input, "logistic: non-finite feature value");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::invalid_input, "logistic: labels must be 0 or 1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw Error(ErrorCode::invalid_input, "logistic: y contains a single class");
}

}  // namespace detail

/// L2-regularized logistic loss with an unpenalized intercept:
///   sum_i log(1 + exp(-s_i (w.x_i + b))) + |w|^2 / (2C),  s_i in {-1, +1}
/// `theta` packs (w, b).
inline double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> y, double c,
                                 const Eigen::VectorXd& theta) {
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd w = theta.head(d);
  const Eigen::VectorXd eta = (x * w).array() + theta(d);
  double loss = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) loss += softplus(y[i] ? -eta(i) : eta(i));
  return loss + w.squaredNorm() / (2 * c);
}

inline Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, std::span<const int> y, double c,
                                         const Eigen::VectorXd& theta) {
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd eta = (x * theta.head(d)).array() + theta(d);
  // p_i - y_i, written so that flipping every label exactly negates it
  Eigen::VectorXd residual(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) residual(i) = y[i] ? -sigmoid(-eta(i)) : sigmoid(eta(i));
  Eigen::VectorXd g(d + 1);
  g.head(d) = x.transpose() * residual + theta.head(d) / c;
  g(d) = residual.sum();
  return g;
}

/// Damped Newton with Armijo backtracking, started from zero. Stops when the
/// gradient max-norm drops below the tolerance; otherwise the model is
/// returned with converged = false.
inline LogisticModel logistic_fit(const Eigen::MatrixXd& x, std::span<const int> y, double c,
                                  const FitOptions& options = {}) {
  detail::check_problem(x, y, c);
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::MatrixXd z(n, d + 1);
  z << x, Eigen::VectorXd::Ones(n);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  double f = logistic_objective(x, y, c, theta);
  if (options.objective_trace) options.objective_trace->assign(1, f);

  LogisticModel model;
  model.c = c;
  Eigen::VectorXd g = logistic_gradient(x, y, c, theta);
  int it = 0;
  for (; it < options.max_iterations && g.lpNorm<Eigen::Infinity>() >= options.tolerance; ++it) {
    const Eigen::VectorXd eta = z * theta;
    Eigen::VectorXd curvature(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      curvature(i) = sigmoid(eta(i)) * sigmoid(-eta(i));
    }
    Eigen::MatrixXd h = z.transpose() * curvature.asDiagonal() * z;
    h.diagonal().head(d).array() += 1.0 / c;

    Eigen::VectorXd step = h.ldlt().solve(-g);
    if (!step.allFinite() || step.dot(g) >= 0) step = -g;

    // tolerate roundoff in f near the optimum
    const double slack = 64 * std::numeric_limits<double>::epsilon() * (1 + std::abs(f));
    double alpha = 1, f_new = f;
    Eigen::VectorXd candidate;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, alpha /= 2) {
      candidate = theta + alpha * step;
      f_new = logistic_objective(x, y, c, candidate);
      if (f_new <= f + 1e-4 * alpha * g.dot(step) + slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no representable decrease left
    theta = candidate;
    f = f_new;
    if (options.objective_trace) options.objective_trace->push_back(f);
    g = logistic_gradient(x, y, c, theta);
  }

  model.weights = theta.head(d);
  model.intercept = theta(d);
  model.iterations = it;
  model.gradient_max_norm = g.lpNorm<Eigen::Infinity>();
  model.converged = model.gradient_max_norm < options.tolerance;
  model.objective = f;
  return model;
}

inline double predict(const LogisticModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.weights.size()) throw Error(ErrorCode::invalid_input, "predict: feature dimension mismatch");
  return sigmoid(m.weights.dot(x) + m.intercept);
}

inline int predict_class(const LogisticModel& m, const Eigen::VectorXd& x) { return predict(m, x) >= 0.5 ? 1 : 0; }

}  // namespace genscale::stats
