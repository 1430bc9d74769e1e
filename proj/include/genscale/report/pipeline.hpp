#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/corpus/io.hpp"
#include "genscale/corpus/sampling.hpp"
#include "genscale/corpus/validation.hpp"
#include "genscale/ratings.hpp"
#include "genscale/report/histogram.hpp"
#include "genscale/report/tables.hpp"
#include "genscale/service/http.hpp"
#include "genscale/service/study.hpp"
#include "genscale/sim/simulate.hpp"
#include "genscale/stats/aggregate.hpp"
#include "genscale/stats/cross_validation.hpp"
#include "genscale/stats/features.hpp"
#include "genscale/stats/icc.hpp"
#include "genscale/stats/wilcoxon.hpp"

namespace genscale::report {

struct AnalysisConfig {
  std::vector<double> c_grid = stats::default_c_grid();
  int outer_folds = 10;
  int inner_folds = 5;
  std::uint64_t seed = 0;
  int n_bins = 20;
};

inline void to_json(nlohmann::json& j, const AnalysisConfig& a) {
  j = {{"c_grid", a.c_grid}, {"outer_folds", a.outer_folds}, {"inner_folds", a.inner_folds},
       {"seed", a.seed}, {"n_bins", a.n_bins}};
}

inline void from_json(const nlohmann::json& j, AnalysisConfig& a) {
  a.c_grid = j.value("c_grid", a.c_grid);
  a.outer_folds = j.value("outer_folds", a.outer_folds);
  a.inner_folds = j.value("inner_folds", a.inner_folds);
  a.seed = j.value("seed", a.seed);
  a.n_bins = j.value("n_bins", a.n_bins);
}

/// Everything a pipeline run needs. Relative paths resolve against base_dir.
struct PipelineConfig {
  std::string corpus_path;
  std::string lexicon_path;
  std::string dataset_path;  // optional: prebuilt dataset instead of corpus + lexicon
  std::string ratings_path;  // optional: existing export instead of simulation
  corpus::DatasetConfig dataset;
  service::StudyConfig study;
  sim::StudySimConfig simulation;
  AnalysisConfig analysis;
  std::vector<std::string> example_ids;
  std::string base_dir = ".";
  nlohmann::json raw = nlohmann::json::object();

  std::string resolve(const std::string& p) const {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(base_dir) / p).string();
  }
};

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j, const std::string& base_dir = ".") {
  PipelineConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  try {
    c.corpus_path = j.value("corpus", "");
    c.lexicon_path = j.value("lexicon", "");
    c.dataset_path = j.value("dataset_path", "");
    c.ratings_path = j.value("ratings", "");
    if (j.contains("dataset")) c.dataset = j["dataset"].get<corpus::DatasetConfig>();
    if (j.contains("study")) c.study = j["study"].get<service::StudyConfig>();
    if (j.contains("simulation")) {
      const auto& s = j["simulation"];
      c.simulation.seed = s.value("seed", c.simulation.seed);
      c.simulation.workers = s.value("workers", c.simulation.workers);
      if (s.contains("inclusiveness")) c.simulation.inclusiveness = s["inclusiveness"].get<sim::SimConfig>();
      if (s.contains("abstractness")) c.simulation.abstractness = s["abstractness"].get<sim::SimConfig>();
    }
    if (j.contains("analysis")) c.analysis = j["analysis"].get<AnalysisConfig>();
    c.example_ids = j.value("examples", c.example_ids);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("pipeline config: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, "pipeline config " + path + ": " + e.what());
  }
  return parse_pipeline_config(j, std::filesystem::path(path).parent_path().string().empty()
                                      ? "."
                                      : std::filesystem::path(path).parent_path().string());
}

/// Raised when a pipeline stage fails; `stage()` names it.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), "stage '" + stage + "' failed: " + cause.what(),
              {{"stage", stage}, {"cause", cause.to_json()}}),
        stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct BundleSummary {
  std::map<std::string, std::string> files;  // relative path -> sha256
  std::map<Dimension, stats::ICCResult> icc;
  std::map<Dimension, stats::WilcoxonResult> wilcoxon;
  std::map<std::string, stats::CVReport> cv;
  std::size_t rating_rows = 0;
  corpus::ValidationReport validation;
};

namespace detail {

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  } catch (const std::exception& e) {
    throw StageError(name, Error(ErrorCode::io_error, e.what()));
  }
}

}  // namespace detail

/// Builds the dataset, runs (or loads) the study, and writes the analysis
/// bundle into out_dir: dataset, ratings, ICC / rank-sum / CV results per
/// dimension and predictor set, histograms, tables and a manifest of hashes.
inline BundleSummary run_pipeline(const PipelineConfig& cfg, const std::string& out_dir,
                                  util::ClockFn manifest_clock = util::now_ms) {
  namespace fs = std::filesystem;
  BundleSummary summary;
  fs::create_directories(fs::path(out_dir) / "tables");
  auto emit = [&](const std::string& rel, const std::string& bytes) {
    util::write_file((fs::path(out_dir) / rel).string(), bytes);
    summary.files[rel] = util::sha256_hex(bytes);
  };
  nlohmann::json inputs = nlohmann::json::object();
  auto record_input = [&](const std::string& key, const std::string& path) {
    inputs[key] = {{"path", path}, {"sha256", util::file_sha256(path)}};
  };

  corpus::StudyDataset dataset;
  if (!cfg.dataset_path.empty()) {
    dataset = detail::stage("load_dataset", [&] {
      record_input("dataset", cfg.resolve(cfg.dataset_path));
      return corpus::load_dataset(cfg.resolve(cfg.dataset_path));
    });
  } else {
    auto sentences = detail::stage("load_corpus", [&] {
      record_input("corpus", cfg.resolve(cfg.corpus_path));
      return corpus::load_corpus(cfg.resolve(cfg.corpus_path));
    });
    auto joined = detail::stage("join_concreteness", [&] {
      const auto lexicon = corpus::load_lexicon(cfg.resolve(cfg.lexicon_path));
      record_input("lexicon", cfg.resolve(cfg.lexicon_path));
      return corpus::join_concreteness(std::move(sentences), lexicon);
    });
    dataset = detail::stage("sample_dataset", [&] { return corpus::sample_dataset(joined, cfg.dataset); });
  }
  summary.validation = detail::stage("validate_dataset", [&] {
    auto report = corpus::validate_dataset(dataset, dataset.config);
    if (!report.passed())
      throw Error(ErrorCode::infeasible, "dataset fails its constraints", nlohmann::json(report));
    return report;
  });
  const auto dataset_hash = corpus::content_hash(dataset);
  emit("dataset.json", corpus::to_document(dataset).dump(2) + "\n");
  emit("validation.json", nlohmann::json(summary.validation).dump(2) + "\n");

  std::string ratings_csv;
  if (!cfg.ratings_path.empty()) {
    ratings_csv = detail::stage("load_ratings", [&] {
      record_input("ratings", cfg.resolve(cfg.ratings_path));
      return util::read_file(cfg.resolve(cfg.ratings_path));
    });
  } else {
    ratings_csv = detail::stage("simulate_study", [&] {
      auto study_cfg = cfg.study;
      study_cfg.log_path.clear();
      service::StudyService study(dataset, study_cfg,
                                  util::SteppingClock(util::Timestamp{std::chrono::sys_days{std::chrono::year{2024} / 1 / 1}}),
                                  service::SeededTokens(cfg.simulation.seed));
      service::InProcessStudyClient client(study);
      return sim::simulate_study(dataset, cfg.simulation, client);
    });
  }
  const auto records = detail::stage("load_ratings", [&] { return parse_ratings_csv(ratings_csv); });
  summary.rating_rows = records.size();
  emit("ratings.csv", ratings_csv);
  const auto ratings_hash = util::sha256_hex(ratings_csv);

  std::map<std::string, Label> gold;
  std::map<std::string, ItemMeta> meta;
  std::vector<corpus::Sentence> all_sentences;
  for (const auto& g : dataset.groups)
    for (const auto& s : g.sentences) {
      gold[s.id] = s.gold;
      meta[s.id] = {s.gold, s.concreteness && corpus::is_concrete(*s.concreteness, dataset.config.concreteness_threshold)};
      all_sentences.push_back(s);
    }
  const auto items = detail::stage("aggregate", [&] {
    auto agg = stats::aggregate(records);
    for (const auto& a : agg)
      if (!gold.count(a.sentence_id))
        throw Error(ErrorCode::invalid_input, "ratings mention sentence '" + a.sentence_id + "' absent from the dataset");
    return agg;
  });

  auto provenance = [&] {
    return nlohmann::json{{"input_hash", ratings_hash}, {"dataset_hash", dataset_hash}, {"seed", cfg.analysis.seed},
                          {"config", cfg.analysis}};
  };

  for (auto dim : kDimensions) {
    const std::string tag(short_name(dim));
    detail::stage("icc", [&] {
      const auto r = stats::icc_oneway(stats::rating_matrix(records, dim));
      summary.icc[dim] = r;
      nlohmann::json doc = {{"dimension", std::string(to_string(dim))}, {"result", r}, {"provenance", provenance()}};
      emit("icc_" + tag + ".json", doc.dump(2) + "\n");
      return 0;
    });
    detail::stage("wilcoxon", [&] {
      const auto r = stats::wilcoxon_by_label(items, gold, dim);
      summary.wilcoxon[dim] = r;
      nlohmann::json doc = {{"dimension", std::string(to_string(dim))},
                            {"a", "GENERIC"},
                            {"b", "NON-GENERIC"},
                            {"result", r},
                            {"provenance", provenance()}};
      emit("wilcoxon_" + tag + ".json", doc.dump(2) + "\n");
      return 0;
    });
  }

  const std::vector<std::pair<std::string, std::vector<Dimension>>> predictor_sets{
      {"INC", {Dimension::inclusiveness}},
      {"ABS", {Dimension::abstractness}},
      {"INC+ABS", {Dimension::inclusiveness, Dimension::abstractness}}};
  for (const auto& [name, dims] : predictor_sets) {
    detail::stage("classify", [&] {
      const auto data = stats::feature_matrix(items, gold, dims);
      stats::CVConfig cv;
      cv.c_grid = cfg.analysis.c_grid;
      cv.outer_folds = cfg.analysis.outer_folds;
      cv.inner_folds = cfg.analysis.inner_folds;
      cv.seed = cfg.analysis.seed;
      auto report = stats::nested_cv(data.x, data.y, cv);
      report.feature_names = data.feature_names;
      summary.cv[name] = report;
      std::string file = name == "INC" ? "cv_inc.json" : name == "ABS" ? "cv_abs.json" : "cv_inc_abs.json";
      nlohmann::json doc = {{"predictors", name}, {"result", report}, {"provenance", provenance()}};
      emit(file, doc.dump(2) + "\n");
      return 0;
    });
  }

  detail::stage("tables", [&] {
    const auto metrics = metrics_table(summary.cv);
    emit("tables/metrics.csv", metrics.to_csv());
    emit("tables/metrics.txt", metrics.to_text());
    std::vector<std::string> ids = cfg.example_ids;
    if (ids.empty())
      for (std::size_t g = 0; g < dataset.groups.size() && g < 6; ++g) ids.push_back(dataset.groups[g].sentences.front().id);
    const auto examples = example_table(items, all_sentences, ids);
    emit("tables/examples.csv", examples.to_csv());
    emit("tables/examples.txt", examples.to_text());
    std::string agg = "sentence_id,lemma,gold,concreteness_class,inc,abs,n_inc,n_abs\n";
    std::map<std::string, std::string> lemma_of;
    for (const auto& s : all_sentences) lemma_of[s.id] = s.lemma;
    for (const auto& a : items)
      agg += a.sentence_id + ',' + lemma_of[a.sentence_id] + ',' + std::string(to_string(gold[a.sentence_id])) + ',' +
             (meta[a.sentence_id].concrete ? "concrete" : "abstract") + ',' +
             (a.inc ? util::fixed(*a.inc, 4) : "NA") + ',' + (a.abs ? util::fixed(*a.abs, 4) : "NA") + ',' +
             std::to_string(a.n_inc) + ',' + std::to_string(a.n_abs) + '\n';
    emit("tables/aggregated.csv", agg);
    return 0;
  });

  detail::stage("histograms", [&] {
    for (auto dim : kDimensions)
      for (auto split : {Split::gold_label, Split::concreteness_class, Split::both}) {
        const auto h = histogram_data(items, meta, {dim, split, cfg.analysis.n_bins});
        const std::string stem = "hist_" + std::string(short_name(dim)) + "_" + std::string(to_string(split));
        emit(stem + ".csv", histogram_csv(h));
        emit(stem + ".svg", histogram_svg(h, std::string(dim == Dimension::inclusiveness ? "INC" : "ABS") + " by " +
                                                 std::string(to_string(split))));
      }
    return 0;
  });

  detail::stage("manifest", [&] {
    nlohmann::json manifest = {
        {"generated_at", util::to_iso8601(manifest_clock())},
        {"inputs", inputs},
        {"config_sha256", util::sha256_hex(cfg.raw.dump())},
        {"dataset_hash", dataset_hash},
        {"ratings_sha256", ratings_hash},
        {"seeds", {{"dataset", dataset.config.seed}, {"simulation", cfg.simulation.seed}, {"analysis", cfg.analysis.seed}}},
        {"files", summary.files}};
    util::write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return 0;
  });
  return summary;
}

}  // namespace genscale::report
