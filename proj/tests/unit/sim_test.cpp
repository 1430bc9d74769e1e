#include <gtest/gtest.h>

#include <map>
#include <set>

#include "support/fixtures.hpp"

using namespace genscale;
using namespace genscale::sim;

namespace {

std::string run_study(const corpus::StudyDataset& d, int k, const StudySimConfig& cfg) {
  service::StudyConfig sc;
  sc.k = k;
  sc.log_path.clear();
  service::StudyService study(d, sc, util::SteppingClock(*util::parse_iso8601("2024-01-01T00:00:00.000Z")),
                              service::SeededTokens(cfg.seed));
  service::InProcessStudyClient client(study);
  auto csv = simulate_study(d, cfg, client);
  EXPECT_TRUE(study.completion_status().study_complete);
  return csv;
}

}  // namespace

TEST(SimulateMatrix, NoNoiseIsPerfectlyReliable) {
  SimConfig cfg;
  cfg.n_items = 40;
  cfg.k = 5;
  cfg.sigma_noise = 0;
  const auto m = simulate_matrix(cfg);
  for (std::size_t i = 0; i < m.n(); ++i)
    for (std::size_t j = 1; j < m.k(); ++j) EXPECT_EQ(m(i, j), m(i, 0));
  EXPECT_DOUBLE_EQ(stats::icc_oneway(m).icc1, 1.0);
}

TEST(SimulateMatrix, NoItemSpreadGivesNullIcc) {
  SimConfig cfg;
  cfg.sigma_item = 0;
  cfg.sigma_noise = 0.1;
  double mean = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    cfg.seed = s;
    mean += stats::icc_oneway(simulate_matrix(cfg)).icc1 / 20;
  }
  // E[MSB] = E[MSW] under the null, so ICC(1) centres on zero
  EXPECT_NEAR(mean, 0.0, 0.01);
}

TEST(SimulateMatrix, DeterministicAndInUnitInterval) {
  SimConfig cfg;
  cfg.sigma_item = 0.4;
  cfg.seed = 17;
  const auto a = simulate_matrix(cfg), b = simulate_matrix(cfg);
  EXPECT_EQ(a.values(), b.values());
  for (double v : a.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  cfg.seed = 18;
  EXPECT_NE(simulate_matrix(cfg).values(), a.values());
}

TEST(SimulateMatrix, RejectPolicyRefusesHopelessParameters) {
  SimConfig cfg;
  cfg.policy = UnitPolicy::reject_out_of_range;
  cfg.n_items = 20;
  cfg.sigma_noise = 3.0;
  try {
    simulate_matrix(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "parameters incompatible with unit interval");
  }
  cfg.sigma_noise = 0.1;
  EXPECT_NO_THROW(simulate_matrix(cfg));
}

TEST(SimulateMatrix, ConfigJsonRoundTrip) {
  SimConfig cfg;
  cfg.sigma_item = 0.2;
  cfg.policy = UnitPolicy::reject_out_of_range;
  cfg.generic_mean = 0.8;
  cfg.non_generic_mean = 0.2;
  const auto back = nlohmann::json(cfg).get<SimConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(cfg));
  EXPECT_THROW(nlohmann::json({{"policy", "wrap"}}).get<SimConfig>(), Error);
}

TEST(SyntheticPool, HasRequestedShapePlusDistractors) {
  const auto pool = synthetic_pool({});
  std::map<std::string, std::array<int, 2>> per_lemma;
  for (const auto& s : pool.sentences) ++per_lemma[s.lemma][s.gold == Label::generic];
  std::size_t eligible = 0, sentences = 0, generic = 0, concrete = 0;
  for (const auto& [lemma, c] : per_lemma) {
    if (lemma.rfind("noun", 0) != 0) continue;
    ++eligible;
    sentences += static_cast<std::size_t>(c[0] + c[1]);
    generic += static_cast<std::size_t>(c[1]);
    EXPECT_GE(c[0], 1);
    EXPECT_GE(c[1], 1);
    EXPECT_GE(c[0] + c[1], 4);
    EXPECT_LE(c[0] + c[1], 8);
    concrete += corpus::is_concrete(pool.lexicon.at(lemma), 3.0);
  }
  EXPECT_EQ(eligible, 60u);
  EXPECT_EQ(sentences, 324u);
  EXPECT_EQ(generic, 159u);
  EXPECT_EQ(concrete, 42u);
  EXPECT_EQ(per_lemma.size(), 68u);
  for (const auto& s : pool.sentences) {
    EXPECT_EQ(util::codepoint_slice(s.text, s.target_span.start, s.target_span.end), s.lemma);
  }
}

TEST(SimulateStudy, ExportHasOneRowPerSentenceRaterDimension) {
  const auto d = testkit::small_dataset();
  StudySimConfig cfg;
  cfg.seed = 4;
  for (int k : {1, 3}) {
    const auto recs = parse_ratings_csv(run_study(d, k, cfg));
    EXPECT_EQ(recs.size(), d.sentence_count() * static_cast<std::size_t>(k) * 2);
    std::map<std::pair<std::string, Dimension>, int> per;
    for (const auto& r : recs) ++per[{r.sentence_id, r.dimension}];
    EXPECT_EQ(per.size(), d.sentence_count() * 2);
    for (const auto& [key, n] : per) EXPECT_EQ(n, k);
  }
}

TEST(SimulateStudy, DeterministicWithSeededTokensAndClock) {
  const auto d = testkit::small_dataset();
  StudySimConfig cfg;
  cfg.seed = 5;
  EXPECT_EQ(run_study(d, 2, cfg), run_study(d, 2, cfg));
  cfg.seed = 6;
  const auto other = run_study(d, 2, cfg);
  cfg.seed = 5;
  EXPECT_NE(run_study(d, 2, cfg), other);
}

TEST(SimulateStudy, GoldConditionedMeansSeparate) {
  const auto d = testkit::small_dataset();
  StudySimConfig cfg;
  cfg.inclusiveness.generic_mean = 0.8;
  cfg.inclusiveness.non_generic_mean = 0.2;
  cfg.inclusiveness.sigma_item = 0.05;
  cfg.inclusiveness.sigma_noise = 0.05;
  const auto items = stats::aggregate(parse_ratings_csv(run_study(d, 4, cfg)));
  std::map<std::string, Label> gold;
  for (const auto& g : d.groups)
    for (const auto& s : g.sentences) gold[s.id] = s.gold;
  for (const auto& it : items) {
    if (gold[it.sentence_id] == Label::generic) EXPECT_GT(*it.inc, 0.5);
    else EXPECT_LT(*it.inc, 0.5);
  }
}

TEST(SimulateStudy, ConcurrentWorkersFillEverySlot) {
  const auto d = testkit::small_dataset();
  StudySimConfig cfg;
  cfg.workers = 4;
  service::StudyConfig sc;
  sc.k = 5;
  service::StudyService study(d, sc);
  service::InProcessStudyClient client(study);
  const auto recs = parse_ratings_csv(simulate_study(d, cfg, client));
  EXPECT_EQ(recs.size(), d.sentence_count() * 5 * 2);
  const auto status = study.completion_status();
  EXPECT_TRUE(status.study_complete);
  EXPECT_EQ(status.complete, 2u * 2u * 5u);  // 2 batches x 2 dimensions x k
}
