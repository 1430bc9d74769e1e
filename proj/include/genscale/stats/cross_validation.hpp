#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "genscale/stats/logistic.hpp"
#include "genscale/util/hash.hpp"

namespace genscale::stats {

inline const std::vector<double>& default_c_grid() {
  static const std::vector<double> grid{0.001, 0.01, 0.1, 1, 10};
  return grid;
}

/// Fold index per sample. Each class is shuffled and dealt round-robin, the
/// second class continuing where the first stopped, so every fold's per-class
/// count is within one of proportional and fold sizes differ by at most one.
inline std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::invalid_input, "stratified folds: k must be >= 2");
  if (y.size() < static_cast<std::size_t>(k))
    throw Error(ErrorCode::invalid_input, "stratified folds: fewer samples than folds",
                {{"n", y.size()}, {"k", k}});
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i] ? 1 : 0].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<int> fold(y.size(), 0);
  std::size_t position = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (auto i : members) fold[i] = static_cast<int>(position++ % static_cast<std::size_t>(k));
  }
  return fold;
}

/// Binary confusion counts with GENERIC (label 1) as the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Per-class metrics; undefined ratios (no predictions / no support) are 0.
inline ClassMetrics class_metrics(const Confusion& m, int label) {
  const double tp = static_cast<double>(label ? m.tp : m.tn);
  const double fp = static_cast<double>(label ? m.fp : m.fn);
  const double fn = static_cast<double>(label ? m.fn : m.fp);
  ClassMetrics c;
  c.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  c.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
  return c;
}

struct FoldMetrics {
  double accuracy = 0;
  ClassMetrics non_generic;  // label 0
  ClassMetrics generic;      // label 1
  Confusion confusion;
  double chosen_c = 0;
  std::vector<double> inner_accuracy;  // mean inner-CV accuracy per grid value
  bool converged = true;
};

/// Metric values in a fixed order, used for means and standard deviations.
struct MetricSummary {
  double accuracy = 0;
  ClassMetrics non_generic;
  ClassMetrics generic;
};

struct CVConfig {
  std::vector<double> c_grid = default_c_grid();
  int outer_folds = 10;
  int inner_folds = 5;
  std::uint64_t seed = 0;
  bool parallel = false;
  FitOptions fit;
};

struct CVReport {
  std::vector<FoldMetrics> folds;
  MetricSummary mean;
  MetricSummary std;  // population standard deviation across outer folds
  CVConfig config;
  std::size_t nonconverged_fits = 0;
  std::vector<std::string> feature_names;
};

inline void to_json(nlohmann::json& j, const ClassMetrics& c) {
  j = {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
}

inline void to_json(nlohmann::json& j, const MetricSummary& m) {
  j = {{"accuracy", m.accuracy}, {"NON-GENERIC", m.non_generic}, {"GENERIC", m.generic}};
}

inline void to_json(nlohmann::json& j, const FoldMetrics& f) {
  j = {{"accuracy", f.accuracy},
       {"NON-GENERIC", f.non_generic},
       {"GENERIC", f.generic},
       {"confusion", {{"tp", f.confusion.tp}, {"fp", f.confusion.fp}, {"tn", f.confusion.tn}, {"fn", f.confusion.fn}}},
       {"chosen_c", f.chosen_c},
       {"inner_accuracy", f.inner_accuracy},
       {"converged", f.converged}};
}

inline void to_json(nlohmann::json& j, const CVReport& r) {
  j = {{"features", r.feature_names},
       {"folds", r.folds},
       {"mean", r.mean},
       {"std", r.std},
       {"c_grid", r.config.c_grid},
       {"outer_folds", r.config.outer_folds},
       {"inner_folds", r.config.inner_folds},
       {"seed", r.config.seed},
       {"inner_selection_metric", "accuracy"},
       {"nonconverged_fits", r.nonconverged_fits}};
}

namespace detail {

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

inline std::vector<int> take(std::span<const int> y, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

inline void require_both_classes(std::span<const int> y, const std::string& where) {
  bool has0 = false, has1 = false;
  for (int v : y) (v ? has1 : has0) = true;
  if (!has0 || !has1) throw Error(ErrorCode::invalid_input, "a class is absent from " + where);
}

inline Confusion evaluate(const LogisticModel& m, const Eigen::MatrixXd& x, std::span<const int> y) {
  Confusion c;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int pred = predict_class(m, x.row(i).transpose());
    if (pred && y[i]) ++c.tp;
    else if (pred && !y[i]) ++c.fp;
    else if (!pred && !y[i]) ++c.tn;
    else ++c.fn;
  }
  return c;
}

inline double accuracy(const Confusion& c) {
  return c.total() ? static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()) : 0.0;
}

struct FoldOutcome {
  FoldMetrics metrics;
  std::size_t nonconverged = 0;
};

inline FoldOutcome run_outer_fold(const Eigen::MatrixXd& x, std::span<const int> y, const std::vector<int>& outer,
                                  int fold, const CVConfig& cfg) {
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < y.size(); ++i) (outer[i] == fold ? test : train).push_back(i);
  const Eigen::MatrixXd x_train = take_rows(x, train), x_test = take_rows(x, test);
  const std::vector<int> y_train = take(y, train), y_test = take(y, test);
  require_both_classes(y_train, "outer-train split " + std::to_string(fold));

  FoldOutcome out;
  const auto inner = stratified_folds(y_train, cfg.inner_folds, util::mix_seed(cfg.seed, static_cast<std::uint64_t>(fold) + 1));
  double best = -1;
  for (double c : cfg.c_grid) {
    double acc_sum = 0;
    for (int f = 0; f < cfg.inner_folds; ++f) {
      std::vector<std::size_t> itrain, itest;
      for (std::size_t i = 0; i < y_train.size(); ++i) (inner[i] == f ? itest : itrain).push_back(i);
      const auto yi = take(y_train, itrain);
      require_both_classes(yi, "inner-train split " + std::to_string(f) + " of outer fold " + std::to_string(fold));
      const auto model = logistic_fit(take_rows(x_train, itrain), yi, c, cfg.fit);
      out.nonconverged += !model.converged;
      acc_sum += accuracy(evaluate(model, take_rows(x_train, itest), take(y_train, itest)));
    }
    const double mean_acc = acc_sum / cfg.inner_folds;
    out.metrics.inner_accuracy.push_back(mean_acc);
    if (mean_acc > best) {  // grid is ascending: ties keep the smaller C
      best = mean_acc;
      out.metrics.chosen_c = c;
    }
  }

  const auto model = logistic_fit(x_train, y_train, out.metrics.chosen_c, cfg.fit);
  out.metrics.converged = model.converged;
  out.nonconverged += !model.converged;
  out.metrics.confusion = evaluate(model, x_test, y_test);
  out.metrics.accuracy = accuracy(out.metrics.confusion);
  out.metrics.non_generic = class_metrics(out.metrics.confusion, 0);
  out.metrics.generic = class_metrics(out.metrics.confusion, 1);
  return out;
}

template <class Get>
std::pair<double, double> mean_std(const std::vector<FoldMetrics>& folds, Get get) {
  double mean = 0;
  for (const auto& f : folds) mean += get(f);
  mean /= static_cast<double>(folds.size());
  double var = 0;
  for (const auto& f : folds) var += (get(f) - mean) * (get(f) - mean);
  return {mean, std::sqrt(var / static_cast<double>(folds.size()))};
}

}  // namespace detail

/// Logistic regression scored by stratified outer CV, with C chosen per outer
/// fold by an inner stratified grid search on mean accuracy (ties go to the
/// smaller C). Deterministic in the seed whether or not folds run in parallel.
inline CVReport nested_cv(const Eigen::MatrixXd& x, std::span<const int> y, CVConfig cfg) {
  if (cfg.c_grid.empty()) throw Error(ErrorCode::invalid_input, "nested CV: empty C grid");
  if (cfg.inner_folds < 2) throw Error(ErrorCode::invalid_input, "nested CV: inner_folds must be >= 2");
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw Error(ErrorCode::invalid_input, "nested CV: x rows and y length differ");
  std::sort(cfg.c_grid.begin(), cfg.c_grid.end());
  const auto outer = stratified_folds(y, cfg.outer_folds, cfg.seed);

  std::vector<detail::FoldOutcome> outcomes(static_cast<std::size_t>(cfg.outer_folds));
  if (cfg.parallel) {
    std::vector<std::future<detail::FoldOutcome>> pending;
    for (int f = 0; f < cfg.outer_folds; ++f)
      pending.push_back(std::async(std::launch::async, [&, f] { return detail::run_outer_fold(x, y, outer, f, cfg); }));
    for (std::size_t f = 0; f < pending.size(); ++f) outcomes[f] = pending[f].get();
  } else {
    for (int f = 0; f < cfg.outer_folds; ++f) outcomes[static_cast<std::size_t>(f)] = detail::run_outer_fold(x, y, outer, f, cfg);
  }

  CVReport report;
  report.config = cfg;
  for (auto& o : outcomes) {
    report.folds.push_back(std::move(o.metrics));
    report.nonconverged_fits += o.nonconverged;
  }
  auto summarize = [&](auto get, double& mean, double& sd) {
    std::tie(mean, sd) = detail::mean_std(report.folds, get);
  };
  summarize([](const FoldMetrics& f) { return f.accuracy; }, report.mean.accuracy, report.std.accuracy);
  summarize([](const FoldMetrics& f) { return f.non_generic.precision; }, report.mean.non_generic.precision, report.std.non_generic.precision);
  summarize([](const FoldMetrics& f) { return f.non_generic.recall; }, report.mean.non_generic.recall, report.std.non_generic.recall);
  summarize([](const FoldMetrics& f) { return f.non_generic.f1; }, report.mean.non_generic.f1, report.std.non_generic.f1);
  summarize([](const FoldMetrics& f) { return f.generic.precision; }, report.mean.generic.precision, report.std.generic.precision);
  summarize([](const FoldMetrics& f) { return f.generic.recall; }, report.mean.generic.recall, report.std.generic.recall);
  summarize([](const FoldMetrics& f) { return f.generic.f1; }, report.mean.generic.f1, report.std.generic.f1);
  return report;
}

/// Largest standard deviation over all reported metrics.
inline double max_metric_std(const CVReport& r) {
  return std::max({r.std.accuracy, r.std.non_generic.precision, r.std.non_generic.recall, r.std.non_generic.f1,
                   r.std.generic.precision, r.std.generic.recall, r.std.generic.f1});
}

}  // namespace genscale::stats
