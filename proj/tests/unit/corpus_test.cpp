#include <gtest/gtest.h>

#include <map>
#include <set>

#include "support/fixtures.hpp"

using namespace genscale;
using namespace genscale::corpus;

namespace {

const char* kCorpus =
    "id\ttext\tspan_start\tspan_end\tlemma\tgold\n"
    "a1\tDogs bark.\t0\t4\tdog\tGENERIC\n"
    "a2\tThe dog over there barks.\t4\t7\tdog\tNON-GENERIC\n"
    "a3\tUn café, s'il vous plaît.\t3\t7\tcafé\tNON-GENERIC\n";

Error parse_error(const std::string& text) {
  try {
    parse_corpus(text);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected a parse error";
  return Error(ErrorCode::invalid_input, "");
}

}  // namespace

TEST(CorpusIo, ParsesRowsAndCodepointSpans) {
  auto s = parse_corpus(kCorpus);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].gold, Label::generic);
  EXPECT_EQ(s[1].gold, Label::non_generic);
  EXPECT_EQ(util::codepoint_slice(s[2].text, s[2].target_span.start, s[2].target_span.end), "café");
}

TEST(CorpusIo, FormatRoundTrips) {
  auto s = parse_corpus(kCorpus);
  EXPECT_EQ(parse_corpus(format_corpus(s)), s);
}

TEST(CorpusIo, ErrorsNameRowAndField) {
  std::string bad = std::string(kCorpus) + "a4\tshort\t0\t99\tx\tGENERIC\n";
  auto e = parse_error(bad);
  EXPECT_EQ(e.code(), ErrorCode::invalid_input);
  EXPECT_EQ(e.details()["row"], 4);
  EXPECT_EQ(e.details()["field"], "span_end");
  EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos);

  EXPECT_EQ(parse_error(std::string(kCorpus) + "a5\tx y\t0\t1\tx\tMAYBE\n").details()["field"], "gold");
  EXPECT_EQ(parse_error(std::string(kCorpus) + "a1\tx y\t0\t1\tx\tGENERIC\n").details()["field"], "id");
  EXPECT_EQ(parse_error("id\ttext\n").code(), ErrorCode::invalid_input);
}

TEST(CorpusIo, LexiconJoinIsAllOrNothing) {
  auto lex = parse_lexicon("lemma,concreteness\ndog,4.9\n");
  try {
    join_concreteness(parse_corpus(kCorpus), lex);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_found);
    EXPECT_EQ(e.details()["missing_lemmas"], nlohmann::json::array({"café"}));
  }
  lex["café"] = 4.5;
  auto joined = join_concreteness(parse_corpus(kCorpus), lex);
  for (const auto& s : joined) EXPECT_TRUE(s.concreteness.has_value());
  EXPECT_THROW(parse_lexicon("dog,7\n"), Error);
}

TEST(CorpusTypes, ThresholdScoreIsAbstract) {
  EXPECT_FALSE(is_concrete(3.0, 3.0));
  EXPECT_TRUE(is_concrete(3.01, 3.0));
}

TEST(CorpusTypes, DocumentRoundTripChecksHash) {
  auto d = testkit::small_dataset();
  auto doc = to_document(d);
  auto back = from_document(doc);
  EXPECT_EQ(content_hash(back), content_hash(d));
  doc["groups"][0]["sentences"][0]["text"] = "tampered";
  EXPECT_THROW(from_document(doc), Error);
}

TEST(Sampling, FullPoolSatisfiesEveryConstraint) {
  auto d = testkit::full_dataset();
  DatasetConfig cfg = d.config;
  auto report = validate_dataset(d, cfg);
  for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.name << " measured " << c.measured;
  EXPECT_EQ(d.groups.size(), 60u);
  EXPECT_EQ(d.sentence_count(), 324u);
  EXPECT_NEAR(report.find("concrete share")->measured, 0.70, 1e-12);
}

TEST(Sampling, ExcludesIneligibleLemmas) {
  auto d = testkit::full_dataset();
  for (const auto& g : d.groups) {
    EXPECT_EQ(g.lemma.rfind("noun", 0), 0u) << g.lemma;
    EXPECT_GE(g.count(Label::generic), 1u);
    EXPECT_GE(g.count(Label::non_generic), 1u);
  }
}

TEST(Sampling, GroupsSortedAndCandidateOrderKept) {
  auto pool = testkit::joined_pool({});
  DatasetConfig cfg;
  cfg.target_label_balance_tolerance = 6;
  auto d = sample_dataset(pool, cfg);
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < pool.size(); ++i) position[pool[i].id] = i;
  for (std::size_t g = 1; g < d.groups.size(); ++g) EXPECT_LT(d.groups[g - 1].lemma, d.groups[g].lemma);
  for (const auto& g : d.groups)
    for (std::size_t i = 1; i < g.sentences.size(); ++i)
      EXPECT_LT(position[g.sentences[i - 1].id], position[g.sentences[i].id]);
}

TEST(Sampling, DeterministicInSeed) {
  auto a = testkit::full_dataset(5), b = testkit::full_dataset(5);
  EXPECT_EQ(content_hash(a), content_hash(b));
}

TEST(Sampling, SubsetDrawVariesWithSeed) {
  sim::PoolShape shape;
  shape.eligible_lemmas = 80;
  shape.sentences = 480;
  shape.generic = 240;
  auto pool = testkit::joined_pool(shape);
  DatasetConfig cfg;
  cfg.n_groups = 40;
  std::set<std::string> hashes;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    cfg.seed = seed;
    auto d = sample_dataset(pool, cfg);
    EXPECT_TRUE(validate_dataset(d, cfg).passed());
    EXPECT_EQ(d.groups.size(), 40u);
    hashes.insert(content_hash(d));
  }
  EXPECT_GT(hashes.size(), 1u);
}

TEST(Sampling, InfeasibleGroupCountReportsBestAchievable) {
  DatasetConfig cfg;
  cfg.target_label_balance_tolerance = 6;
  cfg.n_groups = 61;
  try {
    sample_dataset(testkit::joined_pool({}), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible);
    EXPECT_NE(std::string(e.what()).find("group count"), std::string::npos) << e.what();
  }
}

TEST(Sampling, InfeasibleBalanceNamesConstraint) {
  // every lemma is 1 GENERIC + 3 NON-GENERIC: the gap cannot close
  std::vector<Sentence> pool;
  for (int l = 0; l < 10; ++l)
    for (int i = 0; i < 4; ++i) {
      Sentence s;
      s.lemma = "n" + std::to_string(l);
      s.id = s.lemma + "_" + std::to_string(i);
      s.text = "x " + s.lemma;
      s.target_span = {2, 2 + s.lemma.size()};
      s.gold = i == 0 ? Label::generic : Label::non_generic;
      s.concreteness = l < 7 ? 4.0 : 2.0;
      pool.push_back(s);
    }
  DatasetConfig cfg;
  cfg.n_groups = 10;
  try {
    sample_dataset(pool, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible);
    EXPECT_NE(std::string(e.what()).find("label balance"), std::string::npos) << e.what();
  }
}

TEST(Sampling, MissingConcretenessIsRejected) {
  auto pool = sim::synthetic_pool({}).sentences;
  EXPECT_THROW(sample_dataset(pool, DatasetConfig{}), Error);
}

TEST(Validation, FlagsViolations) {
  auto d = testkit::small_dataset();
  auto cfg = d.config;
  d.groups[0].sentences.resize(1);
  d.groups[1].lemma = d.groups[2].lemma;
  auto r = validate_dataset(d, cfg);
  EXPECT_FALSE(r.passed());
  EXPECT_FALSE(r.find("group size >= 4")->passed);
  EXPECT_EQ(r.find("group size >= 4")->measured, 1.0);
  EXPECT_FALSE(r.find("both labels per group")->passed);
  EXPECT_FALSE(r.find("unique lemmas")->passed);
  EXPECT_FALSE(r.find("group lemma consistency")->passed);
}

TEST(Validation, ConfigRejectsImpossibleBounds) {
  DatasetConfig cfg;
  cfg.group_size_min = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.group_size_min = 9;
  EXPECT_THROW(cfg.validate(), Error);
}
