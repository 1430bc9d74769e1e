// genscale: build datasets, run the annotation service, simulate raters and
// analyze collected ratings.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "genscale/genscale.hpp"

namespace fs = std::filesystem;
using namespace genscale;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "json";
};

nlohmann::json read_json(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, path + ": " + e.what());
  }
}

std::string out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

void print_validation(const corpus::ValidationReport& r) {
  for (const auto& c : r.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  measured=" << util::fixed(c.measured, 3) << "\n";
}

std::map<std::string, Label> gold_of(const corpus::StudyDataset& d) {
  std::map<std::string, Label> gold;
  for (const auto& g : d.groups)
    for (const auto& s : g.sentences) gold[s.id] = s.gold;
  return gold;
}

std::vector<Dimension> parse_dimensions(const std::string& text) {
  std::vector<Dimension> dims;
  for (const auto& f : util::split_record(text, ',')) {
    auto d = parse_dimension(f);
    if (!d) throw Error(ErrorCode::invalid_input, "unknown dimension '" + f + "'");
    dims.push_back(*d);
  }
  return dims;
}

httplib::Server* g_server = nullptr;
void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genscale - continuous genericity annotation studies"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON configuration file");
    sub->add_option("--seed", common.seed, "Seed override");
    sub->add_option("--out-dir", common.out_dir, "Output directory");
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json", "text"}));
  };

  // build-dataset
  std::string corpus_path, lexicon_path;
  auto* build = app.add_subcommand("build-dataset", "Sample a balanced study dataset from a corpus and lexicon");
  build->add_option("--corpus", corpus_path, "Tab-separated corpus")->required();
  build->add_option("--lexicon", lexicon_path, "lemma,concreteness CSV")->required();
  add_common(build);

  // serve
  std::string dataset_path, log_path;
  std::optional<int> port;
  auto* serve = app.add_subcommand("serve", "Run the HTTP annotation service");
  serve->add_option("--dataset", dataset_path, "Dataset JSON")->required();
  serve->add_option("--port", port, "Port (overrides config)");
  serve->add_option("--log", log_path, "Event log path (overrides config)");
  add_common(serve);

  // simulate
  std::string url;
  std::size_t workers = 1;
  bool synthetic_corpus = false;
  auto* simulate = app.add_subcommand("simulate", "Play simulated raters, or write a synthetic corpus");
  simulate->add_option("--dataset", dataset_path, "Dataset JSON");
  simulate->add_option("--url", url, "host:port of a running service (default: in-process)");
  simulate->add_option("--workers", workers, "Concurrent simulated raters");
  simulate->add_flag("--synthetic-corpus", synthetic_corpus, "Write corpus.tsv and lexicon.csv instead");
  add_common(simulate);

  // analyze
  std::string ratings_path, dimension_text = "inc,abs", predictors = "inc";
  auto* analyze = app.add_subcommand("analyze", "Reliability, rank-sum and classification analyses");
  analyze->require_subcommand(1);
  auto* an_icc = analyze->add_subcommand("icc", "One-way ICC(1) and ICC(k) per dimension");
  auto* an_wil = analyze->add_subcommand("wilcoxon", "Rank-sum test of GENERIC vs NON-GENERIC means");
  auto* an_cls = analyze->add_subcommand("classify", "Nested-CV logistic regression on rating means");
  for (auto* sub : {an_icc, an_wil, an_cls}) {
    sub->add_option("--ratings", ratings_path, "Ratings export CSV")->required();
    add_common(sub);
  }
  for (auto* sub : {an_wil, an_cls}) sub->add_option("--dataset", dataset_path, "Dataset JSON")->required();
  an_icc->add_option("--dimension", dimension_text, "inc, abs or inc,abs");
  an_wil->add_option("--dimension", dimension_text, "inc, abs or inc,abs");
  an_cls->add_option("--predictors", predictors, "Comma list of inc/abs");

  // report
  auto* rep = app.add_subcommand("report", "Histograms and tables from ratings");
  rep->add_option("--ratings", ratings_path, "Ratings export CSV")->required();
  rep->add_option("--dataset", dataset_path, "Dataset JSON")->required();
  add_common(rep);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Build, simulate or load, analyze and report in one run");
  add_common(pipe);

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) {
      auto doc = read_json(common.config);
      corpus::DatasetConfig cfg = doc.contains("dataset") ? doc["dataset"].get<corpus::DatasetConfig>()
                                                          : doc.get<corpus::DatasetConfig>();
      if (common.seed) cfg.seed = *common.seed;
      auto sentences = corpus::join_concreteness(corpus::load_corpus(corpus_path), corpus::load_lexicon(lexicon_path));
      auto dataset = corpus::sample_dataset(sentences, cfg);
      auto report = corpus::validate_dataset(dataset, cfg);
      corpus::save_dataset(dataset, out_path(common, "dataset.json"));
      util::write_file(out_path(common, "validation.json"), nlohmann::json(report).dump(2) + "\n");
      if (common.format == "text") print_validation(report);
      else std::cout << nlohmann::json(report).dump(2) << "\n";
      std::cerr << "wrote " << dataset.groups.size() << " groups, " << dataset.sentence_count() << " sentences to "
                << out_path(common, "dataset.json") << "\n";
      return report.passed() ? 0 : 2;
    }

    if (serve->parsed()) {
      auto cfg = service::load_study_config(common.config);
      if (port) cfg.port = *port;
      if (!log_path.empty()) cfg.log_path = log_path;
      service::StudyService study(corpus::load_dataset(dataset_path), cfg);
      httplib::Server server;
      service::mount_routes(server, study);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cerr << "serving " << study.batches().size() << " batches on " << cfg.bind_address << ":" << cfg.port
                << "\n";
      if (!server.listen(cfg.bind_address, cfg.port)) {
        std::cerr << "error: cannot listen on " << cfg.bind_address << ":" << cfg.port << "\n";
        return 1;
      }
      return 0;
    }

    if (simulate->parsed()) {
      auto doc = read_json(common.config);
      if (synthetic_corpus) {
        sim::PoolShape shape;
        if (common.seed) shape.seed = *common.seed;
        auto pool = sim::synthetic_pool(shape);
        util::write_file(out_path(common, "corpus.tsv"), corpus::format_corpus(pool.sentences));
        std::string lex = "lemma,concreteness\n";
        for (const auto& [lemma, score] : pool.lexicon) lex += lemma + "," + util::fixed(score, 2) + "\n";
        util::write_file(out_path(common, "lexicon.csv"), lex);
        std::cerr << "wrote " << pool.sentences.size() << " candidate sentences\n";
        return 0;
      }
      if (dataset_path.empty()) throw Error(ErrorCode::invalid_input, "simulate: --dataset is required");
      auto pc = report::parse_pipeline_config(doc);
      if (common.seed) pc.simulation.seed = *common.seed;
      pc.simulation.workers = workers;
      auto dataset = corpus::load_dataset(dataset_path);
      std::string csv;
      if (!url.empty()) {
        const auto colon = url.rfind(':');
        if (colon == std::string::npos) throw Error(ErrorCode::invalid_input, "--url must be host:port");
        service::HttpStudyClient client(url.substr(0, colon), std::stoi(url.substr(colon + 1)));
        csv = sim::simulate_study(dataset, pc.simulation, client);
      } else {
        auto study_cfg = pc.study;
        study_cfg.log_path.clear();
        service::StudyService study(dataset, study_cfg, util::now_ms, service::SeededTokens(pc.simulation.seed));
        service::InProcessStudyClient client(study);
        csv = sim::simulate_study(dataset, pc.simulation, client);
      }
      util::write_file(out_path(common, "ratings.csv"), csv);
      std::cerr << "wrote " << out_path(common, "ratings.csv") << "\n";
      return 0;
    }

    if (analyze->parsed()) {
      const auto records = parse_ratings_csv(util::read_file(ratings_path));
      const auto input_hash = util::file_sha256(ratings_path);
      nlohmann::json out = nlohmann::json::object();
      if (an_icc->parsed()) {
        for (auto dim : parse_dimensions(dimension_text)) {
          auto r = stats::icc_oneway(stats::rating_matrix(records, dim));
          out[std::string(short_name(dim))] = {{"result", r}, {"provenance", {{"input_hash", input_hash}}}};
          if (common.format == "text")
            std::cout << to_string(dim) << ": ICC(1)=" << util::fixed(r.icc1, 4) << " ICC(k)=" << util::fixed(r.icck, 4)
                      << " k=" << r.k << " n=" << r.n << "\n";
        }
      } else {
        const auto dataset = corpus::load_dataset(dataset_path);
        const auto gold = gold_of(dataset);
        const auto items = stats::aggregate(records);
        if (an_wil->parsed()) {
          for (auto dim : parse_dimensions(dimension_text)) {
            auto r = stats::wilcoxon_by_label(items, gold, dim);
            out[std::string(short_name(dim))] = {{"result", r}, {"provenance", {{"input_hash", input_hash}}}};
            if (common.format == "text")
              std::cout << to_string(dim) << ": U=" << r.u << " z=" << (r.z ? util::fixed(*r.z, 3) : "NA")
                        << " p=" << r.p_two_sided << "\n";
          }
        } else {
          stats::CVConfig cv;
          auto doc = read_json(common.config);
          if (doc.contains("analysis")) {
            auto a = doc["analysis"].get<report::AnalysisConfig>();
            cv.c_grid = a.c_grid;
            cv.outer_folds = a.outer_folds;
            cv.inner_folds = a.inner_folds;
            cv.seed = a.seed;
          }
          if (common.seed) cv.seed = *common.seed;
          const auto dims = parse_dimensions(predictors);
          auto data = stats::feature_matrix(items, gold, dims);
          auto r = stats::nested_cv(data.x, data.y, cv);
          r.feature_names = data.feature_names;
          std::string name;
          for (const auto& f : data.feature_names) name += (name.empty() ? "" : "+") + f;
          out = {{"predictors", name},
                 {"result", r},
                 {"provenance", {{"input_hash", input_hash}, {"seed", cv.seed}}}};
          if (common.format != "json") {
            auto t = report::metrics_table({{name, r}});
            std::cout << (common.format == "csv" ? t.to_csv() : t.to_text());
          }
        }
      }
      if (common.format == "json") std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (rep->parsed()) {
      const auto records = parse_ratings_csv(util::read_file(ratings_path));
      const auto dataset = corpus::load_dataset(dataset_path);
      const auto items = stats::aggregate(records);
      std::map<std::string, report::ItemMeta> meta;
      std::vector<corpus::Sentence> sentences;
      for (const auto& g : dataset.groups)
        for (const auto& s : g.sentences) {
          meta[s.id] = {s.gold, s.concreteness && corpus::is_concrete(*s.concreteness, dataset.config.concreteness_threshold)};
          sentences.push_back(s);
        }
      for (auto dim : kDimensions)
        for (auto split : {report::Split::gold_label, report::Split::concreteness_class, report::Split::both}) {
          auto h = report::histogram_data(items, meta, {dim, split, 20});
          const std::string stem = "hist_" + std::string(short_name(dim)) + "_" + std::string(report::to_string(split));
          util::write_file(out_path(common, stem + ".csv"), report::histogram_csv(h));
          util::write_file(out_path(common, stem + ".svg"), report::histogram_svg(h, stem));
        }
      std::vector<std::string> ids;
      for (std::size_t g = 0; g < dataset.groups.size() && g < 6; ++g) ids.push_back(dataset.groups[g].sentences.front().id);
      auto t = report::example_table(items, sentences, ids);
      std::cout << (common.format == "csv" ? t.to_csv() : t.to_text());
      return 0;
    }

    if (pipe->parsed()) {
      if (common.config.empty()) throw Error(ErrorCode::invalid_input, "pipeline: --config is required");
      auto cfg = report::load_pipeline_config(common.config);
      if (common.seed) {
        cfg.dataset.seed = *common.seed;
        cfg.simulation.seed = *common.seed;
        cfg.analysis.seed = *common.seed;
      }
      auto summary = report::run_pipeline(cfg, common.out_dir);
      auto t = report::metrics_table(summary.cv);
      for (auto dim : kDimensions) {
        const auto& icc = summary.icc.at(dim);
        const auto& w = summary.wilcoxon.at(dim);
        std::cout << to_string(dim) << ": ICC(1)=" << util::fixed(icc.icc1, 3) << " ICC(k)=" << util::fixed(icc.icck, 3)
                  << " rank-sum p=" << w.p_two_sided << "\n";
      }
      std::cout << (common.format == "csv" ? t.to_csv() : t.to_text());
      std::cerr << "bundle written to " << common.out_dir << " (" << summary.files.size() + 1 << " files)\n";
      return 0;
    }
  } catch (const report::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    if (!e.details().empty()) std::cerr << e.details().dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
