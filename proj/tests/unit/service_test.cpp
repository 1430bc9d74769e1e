#include <gtest/gtest.h>

#include <fstream>
#include <memory>
#include <thread>

#include "support/fixtures.hpp"

using namespace genscale;
using namespace genscale::service;

namespace {

struct ManualClock {
  std::shared_ptr<util::Timestamp> now =
      std::make_shared<util::Timestamp>(*util::parse_iso8601("2024-03-01T09:00:00.000Z"));
  util::ClockFn fn() const {
    auto p = now;
    return [p] { return *p; };
  }
  void advance(std::chrono::minutes m) { *now += m; }
};

StudyConfig small_config(int k = 2) {
  StudyConfig c;
  c.k = k;
  c.fsync = false;
  return c;
}

std::vector<std::string> batch_groups(const StudyService& s, const std::string& batch_id) {
  for (const auto& b : s.batches())
    if (b.id == batch_id) return b.group_ids;
  return {};
}

void complete_assignment(StudyService& s, const corpus::StudyDataset& d, const Assignment& a, double value = 0.5) {
  for (const auto& g : batch_groups(s, a.batch_id)) s.submit_ratings(a.rater_id, g, testkit::full_group(d, g, value));
}

template <class F>
Error capture(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error";
  return Error(ErrorCode::io_error, "none");
}

}  // namespace

TEST(Batching, FewestBatchesPreferringLargeSizes) {
  EXPECT_EQ(batch_composition(60, {6, 8, 10}), (std::vector<int>{10, 10, 10, 10, 10, 10}));
  EXPECT_EQ(batch_composition(12, {6, 8, 10}), (std::vector<int>{6, 6}));
  EXPECT_EQ(batch_composition(14, {6, 8, 10}), (std::vector<int>{8, 6}));
  EXPECT_TRUE(batch_composition(7, {6, 8, 10}).empty());
}

TEST(Batching, PartitionsEveryGroupOnce) {
  const auto d = testkit::full_dataset();
  const auto batches = create_batches(d, StudyConfig{});
  ASSERT_EQ(batches.size(), 6u);
  std::set<std::string> seen;
  for (const auto& b : batches) {
    EXPECT_EQ(b.group_ids.size(), 10u);
    for (const auto& g : b.group_ids) EXPECT_TRUE(seen.insert(g).second);
  }
  EXPECT_EQ(seen.size(), 60u);
  EXPECT_EQ(batches.front().id, "b01");
  EXPECT_EQ(nlohmann::json(create_batches(d, StudyConfig{})), nlohmann::json(batches));
}

TEST(Batching, InfeasibleCountNamesPartition) {
  auto d = testkit::small_dataset();
  d.groups.resize(7);
  const auto e = capture([&] { create_batches(d, StudyConfig{}); });
  EXPECT_EQ(e.code(), ErrorCode::infeasible);
  EXPECT_NE(std::string(e.what()).find("no partition of 7 into {6,8,10}"), std::string::npos) << e.what();
}

TEST(Study, LeastCoveredAllocationOrder) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config());
  const auto a = s.register_rater(), b = s.register_rater(), c = s.register_rater(), e = s.register_rater(),
             f = s.register_rater();
  EXPECT_EQ(a.batch_id, "b01");
  EXPECT_EQ(a.dimension, Dimension::inclusiveness);
  EXPECT_EQ(b.batch_id, "b01");
  EXPECT_EQ(b.dimension, Dimension::abstractness);
  EXPECT_EQ(c.batch_id, "b02");
  EXPECT_EQ(c.dimension, Dimension::inclusiveness);
  EXPECT_EQ(e.batch_id, "b02");
  EXPECT_EQ(e.dimension, Dimension::abstractness);
  EXPECT_EQ(f.batch_id, "b01");
  EXPECT_EQ(f.dimension, Dimension::inclusiveness);
  EXPECT_NE(a.rater_id, b.rater_id);
}

TEST(Study, FullStudyRejectsRegistration) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config(1));
  for (int i = 0; i < 4; ++i) s.register_rater();
  const auto e = capture([&] { s.register_rater(); });
  EXPECT_EQ(e.code(), ErrorCode::study_full);
  EXPECT_STREQ(e.what(), "all slots filled");
}

TEST(Study, TaskPayloadHidesGoldAndConcreteness) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config());
  const auto a = s.register_rater();
  const auto task = s.get_task(a.rater_id);
  const auto text = task.dump();
  EXPECT_EQ(text.find("gold"), std::string::npos);
  EXPECT_EQ(text.find("concreteness"), std::string::npos);
  EXPECT_EQ(text.find("\"GENERIC\""), std::string::npos);
  EXPECT_EQ(text.find("NON-GENERIC"), std::string::npos);
  EXPECT_EQ(task["groups"].size(), batch_groups(s, a.batch_id).size());
  EXPECT_EQ(task["anchors"]["left"], default_anchors(Dimension::inclusiveness).left);
  EXPECT_EQ(task["progress"]["submitted"], 0);
}

TEST(Study, PartialSubmissionStoresNothing) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config());
  const auto a = s.register_rater();
  const auto g = batch_groups(s, a.batch_id).front();
  auto items = testkit::full_group(d, g);
  const auto dropped = items.back().sentence_id;
  items.pop_back();
  const auto e = capture([&] { s.submit_ratings(a.rater_id, g, items); });
  EXPECT_EQ(e.code(), ErrorCode::invalid_input);
  EXPECT_NE(std::string(e.what()).find("partial group submission"), std::string::npos);
  EXPECT_EQ(e.details()["missing_sentence_ids"], nlohmann::json::array({dropped}));
  EXPECT_TRUE(s.records().empty());
  EXPECT_EQ(s.completion_status().count(g, a.dimension), 0u);
}

TEST(Study, SubmissionValidation) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config());
  const auto a = s.register_rater();
  const auto groups = batch_groups(s, a.batch_id);
  auto items = testkit::full_group(d, groups[0]);

  auto bad = items;
  bad[0].value = 1.5;
  EXPECT_STREQ(capture([&] { s.submit_ratings(a.rater_id, groups[0], bad); }).what(), "value out of [0,1]");
  bad = items;
  bad.push_back(bad[0]);
  EXPECT_EQ(capture([&] { s.submit_ratings(a.rater_id, groups[0], bad); }).code(), ErrorCode::invalid_input);
  EXPECT_EQ(capture([&] { s.submit_ratings("nobody", groups[0], items); }).code(), ErrorCode::not_found);
  EXPECT_EQ(capture([&] { s.submit_ratings(a.rater_id, "not-a-group", items); }).code(), ErrorCode::not_found);
  EXPECT_TRUE(s.records().empty());

  const auto ack = s.submit_ratings(a.rater_id, groups[0], items);
  EXPECT_EQ(ack.stored, items.size());
  EXPECT_EQ(ack.assignment_status, AssignmentStatus::active);
  const auto dup = capture([&] { s.submit_ratings(a.rater_id, groups[0], items); });
  EXPECT_EQ(dup.code(), ErrorCode::conflict);
  EXPECT_STREQ(dup.what(), "duplicate group submission");
  EXPECT_EQ(s.records().size(), items.size());
}

TEST(Study, ValuesStoredAtFourDecimals) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config());
  const auto a = s.register_rater();
  const auto g = batch_groups(s, a.batch_id).front();
  s.submit_ratings(a.rater_id, g, testkit::full_group(d, g, 0.123456789));
  for (const auto& r : s.records()) EXPECT_DOUBLE_EQ(r.value, 0.1235);
  EXPECT_NE(s.export_ratings("csv").find(",0.1235,"), std::string::npos);
}

TEST(Study, CompletingBatchClosesAssignment) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config(1));
  const auto a = s.register_rater();
  complete_assignment(s, d, a);
  EXPECT_EQ(s.assignment(a.rater_id)->status, AssignmentStatus::complete);
  const auto e = capture([&] { s.get_task(a.rater_id); });
  EXPECT_EQ(e.code(), ErrorCode::conflict);
  EXPECT_STREQ(e.what(), "already submitted");
  const auto st = s.completion_status();
  EXPECT_EQ(st.complete, 1u);
  EXPECT_FALSE(st.study_complete);
}

TEST(Study, CompletionStatusReachesK) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config(2));
  for (int i = 0; i < 8; ++i) complete_assignment(s, d, s.register_rater());
  const auto st = s.completion_status();
  EXPECT_TRUE(st.study_complete);
  for (const auto& c : st.counts) EXPECT_EQ(c.count, 2u);
  EXPECT_EQ(s.records().size(), d.sentence_count() * 2 * 2);
  const auto json = nlohmann::json(st);
  EXPECT_EQ(json["groups"][d.groups[0].lemma]["INCLUSIVENESS"], 2);
}

TEST(Study, TimeoutAbandonsAndReopensSlot) {
  const auto d = testkit::small_dataset();
  ManualClock clock;
  auto cfg = small_config(1);
  cfg.timeout_minutes = 30;
  StudyService s(d, cfg, clock.fn());
  const auto a = s.register_rater();
  const auto g = batch_groups(s, a.batch_id).front();
  s.submit_ratings(a.rater_id, g, testkit::full_group(d, g));
  for (int i = 0; i < 3; ++i) s.register_rater();
  EXPECT_EQ(capture([&] { s.register_rater(); }).code(), ErrorCode::study_full);

  clock.advance(std::chrono::minutes(31));
  const auto e = capture([&] { s.get_task(a.rater_id); });
  EXPECT_EQ(e.code(), ErrorCode::expired);
  EXPECT_STREQ(e.what(), "assignment expired");
  // every other rater also idled past the timeout, so all four slots reopen
  const auto b = s.register_rater();
  EXPECT_EQ(b.batch_id, a.batch_id);
  EXPECT_EQ(b.dimension, a.dimension);
  EXPECT_TRUE(s.records().empty());
  EXPECT_EQ(s.completion_status().count(g, a.dimension), 0u);
  EXPECT_EQ(s.completion_status().abandoned, 4u);
}

TEST(Study, ZeroTimeoutNeverExpires) {
  const auto d = testkit::small_dataset();
  ManualClock clock;
  auto cfg = small_config(1);
  cfg.timeout_minutes = 0;
  StudyService s(d, cfg, clock.fn());
  const auto a = s.register_rater();
  clock.advance(std::chrono::minutes(60 * 24 * 30));
  EXPECT_NO_THROW(s.get_task(a.rater_id));
}

TEST(Study, ConcurrentRegistrationRespectsK) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config(30));
  std::atomic<int> ok{0}, full{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 200; ++t)
    threads.emplace_back([&] {
      try {
        const auto a = s.register_rater();
        ++ok;
        const auto g = batch_groups(s, a.batch_id).front();
        auto items = testkit::full_group(d, g);
        if (a.rater_id.back() % 2) items.pop_back();
        try {
          s.submit_ratings(a.rater_id, g, items);
        } catch (const Error&) {
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::study_full) ++full;
      }
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 120);
  EXPECT_EQ(full.load(), 80);
  for (std::size_t b = 0; b < s.batches().size(); ++b)
    for (auto dim : kDimensions) EXPECT_EQ(s.slot_count(b, dim), 30u);
  // every stored record comes from a complete group
  std::map<std::pair<std::string, std::string>, std::size_t> per_group;
  for (const auto& r : s.records()) ++per_group[{r.rater_id, r.lemma}];
  for (const auto& [key, n] : per_group) EXPECT_EQ(n, testkit::full_group(d, key.second).size());
}

TEST(Study, ExportCsvAndJson) {
  const auto d = testkit::small_dataset();
  StudyService s(d, small_config(1));
  const auto a = s.register_rater();
  const auto g = batch_groups(s, a.batch_id).front();
  s.submit_ratings(a.rater_id, g, testkit::full_group(d, g, 0.25));
  const auto csv = s.export_ratings("csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kExportHeader);
  const auto parsed = parse_ratings_csv(csv);
  EXPECT_EQ(parsed, s.records());
  const auto json = nlohmann::json::parse(s.export_ratings("json"));
  ASSERT_EQ(json.size(), parsed.size());
  EXPECT_EQ(json[0]["dimension"], "INCLUSIVENESS");
  EXPECT_THROW(s.export_ratings("xml"), Error);
}

TEST(EventLogReplay, RestoresStateAfterRestart) {
  testkit::TempDir dir;
  const auto d = testkit::small_dataset();
  auto cfg = small_config(1);
  cfg.log_path = dir.file("events.jsonl");
  std::string csv;
  std::string rater;
  {
    StudyService s(d, cfg);
    const auto a = s.register_rater();
    rater = a.rater_id;
    const auto g = batch_groups(s, a.batch_id);
    s.submit_ratings(a.rater_id, g[0], testkit::full_group(d, g[0], 0.3));
    s.register_rater();
    csv = s.export_ratings();
  }
  StudyService again(d, cfg);
  EXPECT_EQ(again.export_ratings(), csv);
  EXPECT_EQ(again.slot_count(0, Dimension::inclusiveness), 1u);
  EXPECT_EQ(again.slot_count(0, Dimension::abstractness), 1u);
  EXPECT_EQ(again.get_task(rater)["progress"]["submitted"], 1);
}

TEST(EventLogReplay, TornTailIsDropped) {
  testkit::TempDir dir;
  const auto d = testkit::small_dataset();
  auto cfg = small_config(1);
  cfg.log_path = dir.file("events.jsonl");
  {
    StudyService s(d, cfg);
    s.register_rater();
  }
  {
    std::ofstream out(cfg.log_path, std::ios::app);
    out << R"({"event":"submit","rater_id":"x","gro)";
  }
  StudyService again(d, cfg);
  EXPECT_EQ(again.slot_count(0, Dimension::inclusiveness), 1u);
  const auto text = util::read_file(cfg.log_path);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(text.find("\"gro"), std::string::npos);
}

TEST(EventLogReplay, RefusesForeignLog) {
  testkit::TempDir dir;
  auto cfg = small_config(1);
  cfg.log_path = dir.file("events.jsonl");
  { StudyService s(testkit::small_dataset(1), cfg); }
  EXPECT_THROW(StudyService(testkit::small_dataset(2), cfg), Error);
  auto other = cfg;
  other.k = 3;
  EXPECT_THROW(StudyService(testkit::small_dataset(1), other), Error);
}

TEST(StudyConfigLoading, EnvironmentOverridesFile) {
  testkit::TempDir dir;
  util::write_file(dir.file("study.json"), R"({"study": {"k": 12, "port": 9000, "batch_sizes": [5]}})");
  std::map<std::string, std::string> env{{"GENSCALE_K", "7"}, {"GENSCALE_BATCH_SIZES", "6,8"}};
  auto lookup = [&](const std::string& n) -> std::optional<std::string> {
    auto it = env.find(n);
    return it == env.end() ? std::nullopt : std::optional<std::string>(it->second);
  };
  const auto c = load_study_config(dir.file("study.json"), lookup);
  EXPECT_EQ(c.k, 7);
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.batch_sizes, (std::vector<int>{6, 8}));
  env["GENSCALE_K"] = "seven";
  EXPECT_THROW(load_study_config(dir.file("study.json"), lookup), Error);
  env["GENSCALE_K"] = "0";
  EXPECT_THROW(load_study_config(dir.file("study.json"), lookup), Error);
}

TEST(StudyConfigLoading, DefaultAnchorsMentionNoun) {
  const auto inc = default_anchors(Dimension::inclusiveness);
  EXPECT_NE(inc.left.find("{noun}"), std::string::npos);
  EXPECT_NE(inc.right.find("{noun}"), std::string::npos);
  const auto round = nlohmann::json(StudyConfig{}).get<StudyConfig>();
  EXPECT_EQ(nlohmann::json(round), nlohmann::json(StudyConfig{}));
}
