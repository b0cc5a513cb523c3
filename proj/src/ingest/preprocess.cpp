#include "ingest/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "common/errors.hpp"

namespace sabrec::ingest {

std::vector<Session> sessionize(const std::vector<TimedItem>& events, int64_t gap_seconds) {
  std::vector<Session> sessions;
  for (size_t i = 0; i < events.size(); ++i) {
    if (i == 0 || events[i].timestamp - events[i - 1].timestamp > gap_seconds) {
      sessions.emplace_back();
    }
    sessions.back().push_back(events[i]);
  }
  return sessions;
}

std::vector<TimedItem> UserHistory::train_events() const {
  if (events.size() < 3) throw ConfigError("user history too short for a leave-one-out split");
  return std::vector<TimedItem>(events.begin(), events.end() - 2);
}

std::vector<TimedItem> UserHistory::eval_input_events(bool include_validation) const {
  if (events.size() < 3) throw ConfigError("user history too short for a leave-one-out split");
  return std::vector<TimedItem>(events.begin(), events.end() - (include_validation ? 1 : 2));
}

int64_t SplitDataset::num_events() const {
  int64_t n = 0;
  for (const auto& u : users) n += u.size();
  return n;
}

int32_t SplitDataset::item_id(const std::string& name) const {
  auto it = std::lower_bound(item_names.begin(), item_names.end(), name);
  if (it == item_names.end() || *it != name) return -1;
  return static_cast<int32_t>(it - item_names.begin()) + kFirstItemId;
}

SplitDataset preprocess(const std::vector<InteractionEvent>& events, const PreprocessRules& rules) {
  // Global interaction counts over the raw input.
  std::unordered_map<std::string, int64_t> item_counts;
  for (const auto& e : events) ++item_counts[e.item];

  struct RawEvent {
    const std::string* item;
    int64_t timestamp;
  };
  // Group by user preserving file order, skipping rare items.
  std::unordered_map<std::string, std::vector<RawEvent>> by_user;
  for (const auto& e : events) {
    if (item_counts[e.item] <= rules.max_dropped_item_count) continue;
    by_user[e.user].push_back({&e.item, e.timestamp});
  }

  std::vector<std::string> user_order;
  user_order.reserve(by_user.size());
  for (const auto& [user, evs] : by_user) {
    if (static_cast<int64_t>(evs.size()) > rules.max_dropped_user_history) {
      user_order.push_back(user);
    }
  }
  std::sort(user_order.begin(), user_order.end());

  struct Survivor {
    std::string user_raw;
    std::vector<std::pair<const std::string*, int64_t>> events;  // (item string, ts)
  };
  std::vector<Survivor> survivors;

  for (const auto& user : user_order) {
    auto& evs = by_user[user];
    // Timestamp ties keep raw-file order.
    std::stable_sort(evs.begin(), evs.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.timestamp < b.timestamp; });
    if (static_cast<int64_t>(evs.size()) > rules.recent_cap) {
      evs.erase(evs.begin(), evs.end() - static_cast<long>(rules.recent_cap));
    }
    std::vector<TimedItem> timeline(evs.size());
    for (size_t i = 0; i < evs.size(); ++i) timeline[i] = {0, evs[i].timestamp};
    auto sessions = sessionize(timeline, rules.session_gap_seconds);

    Survivor s;
    s.user_raw = user;
    size_t cursor = 0;
    int64_t kept_sessions = 0;
    for (const auto& sess : sessions) {
      if (static_cast<int64_t>(sess.size()) >= rules.min_session_items) {
        ++kept_sessions;
        for (size_t k = 0; k < sess.size(); ++k) {
          s.events.emplace_back(evs[cursor + k].item, evs[cursor + k].timestamp);
        }
      }
      cursor += sess.size();
    }
    if (kept_sessions >= rules.min_sessions) survivors.push_back(std::move(s));
  }

  if (survivors.empty()) throw ConfigError("dataset empty after preprocessing");

  // Vocabulary over surviving events, lexicographic by item string id.
  std::vector<std::string> item_names;
  {
    std::unordered_map<std::string, bool> seen;
    for (const auto& s : survivors)
      for (const auto& [item, ts] : s.events) seen.emplace(*item, true);
    item_names.reserve(seen.size());
    for (const auto& [item, _] : seen) item_names.push_back(item);
    std::sort(item_names.begin(), item_names.end());
  }

  SplitDataset out;
  out.item_names = std::move(item_names);
  out.users.reserve(survivors.size());
  for (size_t u = 0; u < survivors.size(); ++u) {
    UserHistory h;
    h.user = static_cast<int32_t>(u);
    h.user_raw = std::move(survivors[u].user_raw);
    h.events.reserve(survivors[u].events.size());
    for (const auto& [item, ts] : survivors[u].events) {
      h.events.push_back({out.item_id(*item), ts});
    }
    out.users.push_back(std::move(h));
  }
  return out;
}

int64_t nearest_rank_quantile(std::vector<int64_t> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  auto n = static_cast<double>(values.size());
  auto rank = static_cast<size_t>(std::ceil(p * n));
  if (rank == 0) rank = 1;
  return values[rank - 1];
}

DatasetStats compute_stats(const SplitDataset& dataset, int64_t gap_seconds) {
  DatasetStats s;
  s.users = static_cast<int64_t>(dataset.users.size());
  s.items = dataset.num_items();
  s.rows = dataset.num_events();
  s.density = (s.users > 0 && s.items > 0)
                  ? static_cast<double>(s.rows) / (static_cast<double>(s.users) * static_cast<double>(s.items))
                  : 0.0;

  std::vector<int64_t> per_user_items, per_user_sessions, per_session_items;
  for (const auto& u : dataset.users) {
    per_user_items.push_back(u.size());
    auto sessions = sessionize(u.events, gap_seconds);
    per_user_sessions.push_back(static_cast<int64_t>(sessions.size()));
    for (const auto& sess : sessions) {
      per_session_items.push_back(static_cast<int64_t>(sess.size()));
    }
  }
  for (int q = 0; q < 3; ++q) {
    double p = 0.25 * (q + 1);
    s.items_per_user[q] = nearest_rank_quantile(per_user_items, p);
    s.sessions_per_user[q] = nearest_rank_quantile(per_user_sessions, p);
    s.items_per_session[q] = nearest_rank_quantile(per_session_items, p);
  }
  return s;
}

}  // namespace sabrec::ingest
