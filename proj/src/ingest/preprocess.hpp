#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ingest/events.hpp"

namespace sabrec::ingest {

// Greedy left-to-right sessionization: a new session starts whenever the gap
// to the previous event exceeds gap_seconds. Events must be sorted ascending.
std::vector<Session> sessionize(const std::vector<TimedItem>& events,
                                int64_t gap_seconds = kDaySeconds);

struct PreprocessRules {
  int64_t max_dropped_item_count = 5;   // items with <= this many interactions are removed
  int64_t max_dropped_user_history = 5; // users with <= this many events are removed
  int64_t recent_cap = 200;             // keep only this many most recent events per user
  int64_t session_gap_seconds = kDaySeconds;
  int64_t min_session_items = 2;
  int64_t min_sessions = 2;
};

struct UserHistory {
  int32_t user = 0;
  std::string user_raw;
  std::vector<TimedItem> events;  // chronological; last = test, second to last = validation

  int64_t size() const { return static_cast<int64_t>(events.size()); }
  std::vector<TimedItem> train_events() const;
  std::vector<TimedItem> eval_input_events(bool include_validation) const;
  const TimedItem& validation_item() const { return events[events.size() - 2]; }
  const TimedItem& test_item() const { return events.back(); }
};

// Post-filter dataset with the leave-one-out split implied by event order.
// Item vocabulary: 0 = padding, 1 = mask, 2 = session token, items from 3.
struct SplitDataset {
  std::vector<UserHistory> users;        // internal user id == index
  std::vector<std::string> item_names;   // item internal id == index + kFirstItemId

  int32_t num_items() const { return static_cast<int32_t>(item_names.size()); }
  int32_t vocab_size() const { return num_items() + kFirstItemId; }
  int64_t num_events() const;
  int32_t item_id(const std::string& name) const;  // -1 if unknown
};

// Applies, in order: item-count filter, user-history filter, recency cap,
// sessionization, short-session drop, few-session drop, vocabulary build,
// leave-one-out split. Single pass; filters do not iterate to a fixpoint.
SplitDataset preprocess(const std::vector<InteractionEvent>& events,
                        const PreprocessRules& rules = {});

struct DatasetStats {
  int64_t users = 0;
  int64_t items = 0;
  int64_t rows = 0;
  double density = 0.0;
  // Nearest-rank quartiles of per-user items, per-user sessions and
  // per-session items.
  int64_t items_per_user[3] = {0, 0, 0};
  int64_t sessions_per_user[3] = {0, 0, 0};
  int64_t items_per_session[3] = {0, 0, 0};
};

DatasetStats compute_stats(const SplitDataset& dataset,
                           int64_t gap_seconds = kDaySeconds);

// Nearest-rank quantile: smallest element with rank >= ceil(p * n).
int64_t nearest_rank_quantile(std::vector<int64_t> values, double p);

}  // namespace sabrec::ingest
