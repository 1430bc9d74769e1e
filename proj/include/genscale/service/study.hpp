#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/corpus/types.hpp"
#include "genscale/ratings.hpp"
#include "genscale/service/batching.hpp"
#include "genscale/service/config.hpp"
#include "genscale/service/event_log.hpp"
#include "genscale/util/time.hpp"

namespace genscale::service {

enum class AssignmentStatus { active, complete, abandoned };

constexpr std::string_view to_string(AssignmentStatus s) {
  switch (s) {
    case AssignmentStatus::active: return "active";
    case AssignmentStatus::complete: return "complete";
    case AssignmentStatus::abandoned: return "abandoned";
  }
  return "unknown";
}

struct Assignment {
  std::string rater_id;
  std::string batch_id;
  Dimension dimension = Dimension::inclusiveness;
  AssignmentStatus status = AssignmentStatus::active;
};

inline void to_json(nlohmann::json& j, const Assignment& a) {
  j = {{"rater_id", a.rater_id},
       {"batch_id", a.batch_id},
       {"dimension", std::string(to_string(a.dimension))},
       {"status", std::string(to_string(a.status))}};
}

struct RatingItem {
  std::string sentence_id;
  double value = 0;
};

struct SubmitAck {
  std::size_t stored = 0;
  AssignmentStatus assignment_status = AssignmentStatus::active;
};

struct GroupCount {
  std::string group_id;
  Dimension dimension;
  std::size_t count = 0;
};

struct CompletionStatus {
  std::size_t k = 0;
  std::vector<GroupCount> counts;  // ordered by (group_id, dimension)
  std::size_t active = 0, complete = 0, abandoned = 0;
  bool study_complete = false;

  std::size_t count(const std::string& group, Dimension d) const {
    for (const auto& c : counts)
      if (c.group_id == group && c.dimension == d) return c.count;
    return 0;
  }
};

inline void to_json(nlohmann::json& j, const CompletionStatus& s) {
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& c : s.counts) groups[c.group_id][std::string(to_string(c.dimension))] = c.count;
  j = {{"k", s.k},
       {"groups", groups},
       {"raters", {{"active", s.active}, {"complete", s.complete}, {"abandoned", s.abandoned}}},
       {"study_complete", s.study_complete}};
}

/// 128-bit hex token from the OS entropy source.
inline std::string random_token() {
  std::random_device rd;
  char buf[33];
  std::snprintf(buf, sizeof buf, "%08x%08x%08x%08x", rd(), rd(), rd(), rd());
  return buf;
}

/// Seeded token source, for reproducible simulations.
class SeededTokens {
 public:
  explicit SeededTokens(std::uint64_t seed) : rng_(std::make_shared<std::mt19937_64>(seed)) {}
  std::string operator()() {
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>((*rng_)()),
                  static_cast<unsigned long long>((*rng_)()));
    return buf;
  }

 private:
  std::shared_ptr<std::mt19937_64> rng_;
};

/// Annotation study state: rater slots, assignments and the rating store.
///
/// Every (batch, dimension) slot admits at most k raters that are active or
/// complete. Group submissions are all-or-nothing. All mutations are
/// serialized by one lock and appended to the event log before they are
/// applied; reads take a shared lock and see a consistent snapshot.
/// Assignments idle for longer than the timeout are abandoned: their slot
/// reopens and their ratings are kept in the log but excluded from status and
/// export.
class StudyService {
 public:
  using TokenFn = std::function<std::string()>;

  StudyService(corpus::StudyDataset dataset, StudyConfig config, util::ClockFn clock = util::now_ms,
               TokenFn tokens = random_token)
      : dataset_(std::move(dataset)),
        config_(std::move(config)),
        clock_(std::move(clock)),
        tokens_(std::move(tokens)) {
    config_.validate();
    batches_ = create_batches(dataset_, config_);
    dataset_hash_ = corpus::content_hash(dataset_);
    for (std::size_t g = 0; g < dataset_.groups.size(); ++g) {
      group_index_[dataset_.groups[g].lemma] = g;
      for (const auto& s : dataset_.groups[g].sentences) sentence_group_[s.id] = g;
    }
    for (std::size_t b = 0; b < batches_.size(); ++b) {
      batch_index_[batches_[b].id] = b;
      for (const auto& gid : batches_[b].group_ids) group_batch_[gid] = b;
    }
    slot_count_.assign(batches_.size(), {0, 0});
    if (!config_.log_path.empty()) {
      log_ = std::make_unique<EventLog>(config_.log_path, config_.fsync);
      replay(log_->recovered());
    }
  }

  const std::vector<Batch>& batches() const { return batches_; }
  const corpus::StudyDataset& dataset() const { return dataset_; }
  const StudyConfig& config() const { return config_; }
  const std::string& dataset_hash() const { return dataset_hash_; }

  /// Binds a fresh rater to the least-covered open (batch, dimension) slot;
  /// ties go to the lowest batch, inclusiveness first.
  Assignment register_rater() {
    std::unique_lock lock(mutex_);
    const auto now = clock_();
    sweep_expired(now);
    std::size_t best_b = 0;
    int best_d = -1;
    std::size_t best = 0;
    for (std::size_t b = 0; b < batches_.size(); ++b)
      for (int d = 0; d < 2; ++d) {
        const auto c = slot_count_[b][static_cast<std::size_t>(d)];
        if (c >= static_cast<std::size_t>(config_.k)) continue;
        if (best_d < 0 || c < best) {
          best_b = b;
          best_d = d;
          best = c;
        }
      }
    if (best_d < 0) throw Error(ErrorCode::study_full, "all slots filled");
    std::string id;
    do id = tokens_();
    while (raters_.count(id));
    const auto dim = static_cast<Dimension>(best_d);
    append({{"event", "register"},
            {"rater_id", id},
            {"batch_id", batches_[best_b].id},
            {"dimension", std::string(to_string(dim))},
            {"at", util::to_iso8601(now)}});
    apply_register(id, best_b, dim, now);
    return view(raters_.at(id));
  }

  /// Task payload for a rater. Never carries gold labels or concreteness.
  nlohmann::json get_task(const std::string& rater_id) {
    std::unique_lock lock(mutex_);
    auto& r = active_rater(rater_id, clock_());
    const auto& batch = batches_[r.batch];
    const auto& anchors = config_.anchors(r.dimension);
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& gid : batch.group_ids) {
      const auto& group = dataset_.groups[group_index_.at(gid)];
      nlohmann::json sentences = nlohmann::json::array();
      for (const auto& s : group.sentences)
        sentences.push_back({{"sentence_id", s.id},
                             {"text", s.text},
                             {"target_span", {s.target_span.start, s.target_span.end}}});
      groups.push_back({{"group_id", gid},
                        {"lemma", group.lemma},
                        {"submitted", r.submitted.count(gid) > 0},
                        {"sentences", sentences}});
    }
    return {{"rater_id", rater_id},
            {"batch_id", batch.id},
            {"dimension", std::string(to_string(r.dimension))},
            {"anchors", anchors},
            {"progress", {{"submitted", r.submitted.size()}, {"total", batch.group_ids.size()}}},
            {"groups", groups}};
  }

  /// Stores one complete group of ratings, or nothing.
  SubmitAck submit_ratings(const std::string& rater_id, const std::string& group_id,
                           const std::vector<RatingItem>& items) {
    std::unique_lock lock(mutex_);
    const auto now = clock_();
    auto& r = active_rater(rater_id, now);
    const auto& batch = batches_[r.batch];
    if (std::find(batch.group_ids.begin(), batch.group_ids.end(), group_id) == batch.group_ids.end())
      throw Error(ErrorCode::not_found, "group '" + group_id + "' is not in the rater's batch",
                  {{"group_id", group_id}, {"batch_id", batch.id}});
    if (r.submitted.count(group_id))
      throw Error(ErrorCode::conflict, "duplicate group submission", {{"group_id", group_id}});

    const auto& group = dataset_.groups[group_index_.at(group_id)];
    std::set<std::string> expected;
    for (const auto& s : group.sentences) expected.insert(s.id);
    std::set<std::string> seen;
    std::vector<std::string> unknown, duplicate, out_of_range;
    for (const auto& item : items) {
      if (!std::isfinite(item.value) || item.value < 0.0 || item.value > 1.0) out_of_range.push_back(item.sentence_id);
      if (!expected.count(item.sentence_id)) unknown.push_back(item.sentence_id);
      else if (!seen.insert(item.sentence_id).second) duplicate.push_back(item.sentence_id);
    }
    if (!out_of_range.empty())
      throw Error(ErrorCode::invalid_input, "value out of [0,1]", {{"sentence_ids", out_of_range}});
    if (!unknown.empty())
      throw Error(ErrorCode::invalid_input, "sentences not in group '" + group_id + "'", {{"sentence_ids", unknown}});
    if (!duplicate.empty())
      throw Error(ErrorCode::invalid_input, "sentence rated more than once", {{"sentence_ids", duplicate}});
    std::vector<std::string> missing;
    for (const auto& id : expected)
      if (!seen.count(id)) missing.push_back(id);
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
      throw Error(ErrorCode::invalid_input, "partial group submission; missing sentence_ids: " + list,
                  {{"missing_sentence_ids", missing}});
    }

    nlohmann::json rows = nlohmann::json::array();
    for (const auto& item : items) rows.push_back({item.sentence_id, util::round_to(item.value, kValueDecimals)});
    append({{"event", "submit"},
            {"rater_id", rater_id},
            {"group_id", group_id},
            {"items", rows},
            {"at", util::to_iso8601(now)}});
    apply_submit(rater_id, group_id, rows, now);
    return {items.size(), raters_.at(rater_id).status};
  }

  CompletionStatus completion_status() const {
    std::shared_lock lock(mutex_);
    CompletionStatus s;
    s.k = static_cast<std::size_t>(config_.k);
    std::map<std::pair<std::string, int>, std::size_t> counts;
    for (const auto& g : dataset_.groups)
      for (int d = 0; d < 2; ++d) counts[{g.lemma, d}] = 0;
    for (const auto& [id, r] : raters_) {
      if (r.status == AssignmentStatus::active) ++s.active;
      if (r.status == AssignmentStatus::complete) ++s.complete;
      if (r.status == AssignmentStatus::abandoned) {
        ++s.abandoned;
        continue;
      }
      for (const auto& g : r.submitted) ++counts[{g, static_cast<int>(r.dimension)}];
    }
    s.study_complete = !counts.empty();
    for (const auto& [key, n] : counts) {
      s.counts.push_back({key.first, static_cast<Dimension>(key.second), n});
      if (n != s.k) s.study_complete = false;
    }
    return s;
  }

  /// Ratings of non-abandoned raters, sorted by (sentence_id, dimension, rater_id).
  std::vector<RatingRecord> records() const {
    std::shared_lock lock(mutex_);
    std::vector<RatingRecord> out;
    for (const auto& rec : records_)
      if (raters_.at(rec.rater_id).status != AssignmentStatus::abandoned) out.push_back(rec);
    sort_for_export(out);
    return out;
  }

  /// "csv" (export schema) or "json" (array of records).
  std::string export_ratings(const std::string& format = "csv") const {
    auto recs = records();
    if (format == "csv") return format_ratings_csv(std::move(recs));
    if (format == "json") {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : recs)
        arr.push_back({{"rater_id", r.rater_id},
                       {"sentence_id", r.sentence_id},
                       {"lemma", r.lemma},
                       {"dimension", std::string(to_string(r.dimension))},
                       {"value", r.value},
                       {"submitted_at", util::to_iso8601(r.submitted_at)}});
      return arr.dump();
    }
    throw Error(ErrorCode::invalid_input, "unknown export format '" + format + "'");
  }

  std::optional<Assignment> assignment(const std::string& rater_id) const {
    std::shared_lock lock(mutex_);
    auto it = raters_.find(rater_id);
    if (it == raters_.end()) return std::nullopt;
    return view(it->second);
  }

  /// Per-slot count of active or complete raters.
  std::size_t slot_count(std::size_t batch, Dimension d) const {
    std::shared_lock lock(mutex_);
    return slot_count_.at(batch)[static_cast<std::size_t>(d)];
  }

 private:
  struct RaterState {
    std::string id;
    std::size_t batch = 0;
    Dimension dimension = Dimension::inclusiveness;
    AssignmentStatus status = AssignmentStatus::active;
    std::set<std::string> submitted;
    util::Timestamp last_activity{};
  };

  Assignment view(const RaterState& r) const { return {r.id, batches_[r.batch].id, r.dimension, r.status}; }

  bool expired(const RaterState& r, util::Timestamp now) const {
    return config_.timeout_minutes > 0 && r.status == AssignmentStatus::active &&
           now - r.last_activity > std::chrono::minutes(config_.timeout_minutes);
  }

  void sweep_expired(util::Timestamp now) {
    for (auto& [id, r] : raters_)
      if (expired(r, now)) abandon(r, now);
  }

  void abandon(RaterState& r, util::Timestamp now) {
    append({{"event", "abandon"}, {"rater_id", r.id}, {"at", util::to_iso8601(now)}});
    apply_abandon(r);
  }

  RaterState& active_rater(const std::string& rater_id, util::Timestamp now) {
    auto it = raters_.find(rater_id);
    if (it == raters_.end()) throw Error(ErrorCode::not_found, "unknown rater", {{"rater_id", rater_id}});
    auto& r = it->second;
    if (expired(r, now)) abandon(r, now);
    if (r.status == AssignmentStatus::complete) throw Error(ErrorCode::conflict, "already submitted");
    if (r.status == AssignmentStatus::abandoned) throw Error(ErrorCode::expired, "assignment expired");
    r.last_activity = now;
    return r;
  }

  void append(const nlohmann::json& event) {
    if (log_) log_->append(event);
  }

  void apply_register(const std::string& id, std::size_t batch, Dimension dim, util::Timestamp at) {
    RaterState r;
    r.id = id;
    r.batch = batch;
    r.dimension = dim;
    r.last_activity = at;
    raters_.emplace(id, std::move(r));
    ++slot_count_[batch][static_cast<std::size_t>(dim)];
  }

  void apply_submit(const std::string& rater_id, const std::string& group_id, const nlohmann::json& rows,
                    util::Timestamp at) {
    auto& r = raters_.at(rater_id);
    const auto& lemma = dataset_.groups[group_index_.at(group_id)].lemma;
    for (const auto& row : rows)
      records_.push_back({rater_id, row.at(0).get<std::string>(), lemma, r.dimension, row.at(1).get<double>(), at});
    r.submitted.insert(group_id);
    r.last_activity = at;
    if (r.submitted.size() == batches_[r.batch].group_ids.size()) r.status = AssignmentStatus::complete;
  }

  void apply_abandon(RaterState& r) {
    if (r.status != AssignmentStatus::active) return;
    r.status = AssignmentStatus::abandoned;
    --slot_count_[r.batch][static_cast<std::size_t>(r.dimension)];
  }

  void replay(const std::vector<nlohmann::json>& events) {
    if (events.empty()) {
      append({{"event", "open"}, {"dataset_hash", dataset_hash_}, {"k", config_.k}, {"batch_sizes", config_.batch_sizes}});
      return;
    }
    const auto& head = events.front();
    if (head.value("event", "") != "open" || head.value("dataset_hash", "") != dataset_hash_)
      throw Error(ErrorCode::invalid_input, "event log belongs to a different dataset");
    if (head.value("k", 0) != config_.k || head.value("batch_sizes", std::vector<int>{}) != config_.batch_sizes)
      throw Error(ErrorCode::invalid_input, "event log was written with a different k or batch sizes");
    for (std::size_t i = 1; i < events.size(); ++i) {
      const auto& e = events[i];
      const auto type = e.at("event").get<std::string>();
      const auto at = util::parse_iso8601(e.at("at").get<std::string>()).value_or(util::Timestamp{});
      const auto rater = e.at("rater_id").get<std::string>();
      if (type == "register") {
        apply_register(rater, batch_index_.at(e.at("batch_id").get<std::string>()),
                       *parse_dimension(e.at("dimension").get<std::string>()), at);
      } else if (type == "submit") {
        apply_submit(rater, e.at("group_id").get<std::string>(), e.at("items"), at);
      } else if (type == "abandon") {
        apply_abandon(raters_.at(rater));
      } else {
        throw Error(ErrorCode::io_error, "unknown event '" + type + "' in event log");
      }
    }
  }

  corpus::StudyDataset dataset_;
  StudyConfig config_;
  util::ClockFn clock_;
  TokenFn tokens_;
  std::vector<Batch> batches_;
  std::string dataset_hash_;
  std::unordered_map<std::string, std::size_t> group_index_, sentence_group_, batch_index_, group_batch_;
  std::vector<std::array<std::size_t, 2>> slot_count_;
  std::map<std::string, RaterState> raters_;
  std::vector<RatingRecord> records_;
  std::unique_ptr<EventLog> log_;
  mutable std::shared_mutex mutex_;
};

}  // namespace genscale::service
