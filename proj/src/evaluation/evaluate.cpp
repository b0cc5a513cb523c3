#include "evaluation/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "common/errors.hpp"
#include "model/input.hpp"
#include "model/model.hpp"
#include "numerics/rng.hpp"

namespace sabrec::evaluation {

using ingest::kDaySeconds;
using ingest::kFirstItemId;
using ingest::SplitDataset;
using ingest::UserHistory;
using numerics::Rng;

namespace {

constexpr int64_t kNegatives = 100;

std::unordered_set<int32_t> history_set(const UserHistory& user) {
  std::unordered_set<int32_t> seen;
  for (const auto& e : user.events) seen.insert(e.item);
  return seen;
}

}  // namespace

std::vector<int64_t> train_popularity(const SplitDataset& dataset) {
  std::vector<int64_t> counts(static_cast<size_t>(dataset.num_items()), 0);
  for (const auto& u : dataset.users) {
    for (size_t i = 0; i + 2 < u.events.size(); ++i) {
      ++counts[static_cast<size_t>(u.events[i].item - kFirstItemId)];
    }
  }
  return counts;
}

CandidateSet build_candidates(const SplitDataset& dataset, const std::vector<int64_t>& popularity,
                              int32_t user, int32_t truth_item, Scheme scheme, uint64_t seed) {
  const int32_t n_items = dataset.num_items();
  CandidateSet out;
  if (scheme == Scheme::all) {
    out.items.resize(static_cast<size_t>(n_items));
    for (int32_t i = 0; i < n_items; ++i) out.items[static_cast<size_t>(i)] = i + kFirstItemId;
    out.truth_index = static_cast<size_t>(truth_item - kFirstItemId);
    return out;
  }

  auto seen = history_set(dataset.users[static_cast<size_t>(user)]);
  if (scheme == Scheme::random) {
    std::vector<int32_t> eligible;
    eligible.reserve(static_cast<size_t>(n_items));
    for (int32_t i = 0; i < n_items; ++i) {
      int32_t id = i + kFirstItemId;
      if (!seen.count(id)) eligible.push_back(id);
    }
    if (static_cast<int64_t>(eligible.size()) < kNegatives) {
      throw ConfigError("build_candidates: user " + std::to_string(user) + " has only " +
                        std::to_string(eligible.size()) + " eligible negatives (need 100)");
    }
    Rng rng(numerics::mix_seed({seed, static_cast<uint64_t>(user)}));
    for (int64_t i = 0; i < kNegatives; ++i) {
      size_t j = static_cast<size_t>(i) +
                 static_cast<size_t>(rng.uniform_int(eligible.size() - static_cast<size_t>(i)));
      std::swap(eligible[static_cast<size_t>(i)], eligible[j]);
    }
    out.items.assign(eligible.begin(), eligible.begin() + kNegatives);
  } else {  // popular
    std::vector<int32_t> order(static_cast<size_t>(n_items));
    for (int32_t i = 0; i < n_items; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
      int64_t ca = popularity[static_cast<size_t>(a)], cb = popularity[static_cast<size_t>(b)];
      return ca != cb ? ca > cb : a < b;
    });
    for (int32_t idx : order) {
      int32_t id = idx + kFirstItemId;
      if (id == truth_item || seen.count(id)) continue;
      out.items.push_back(id);
      if (static_cast<int64_t>(out.items.size()) == kNegatives) break;
    }
    if (static_cast<int64_t>(out.items.size()) < kNegatives) {
      throw ConfigError("build_candidates: user " + std::to_string(user) + " has only " +
                        std::to_string(out.items.size()) + " eligible popular negatives (need 100)");
    }
  }
  out.truth_index = out.items.size();
  out.items.push_back(truth_item);
  return out;
}

namespace {

struct PerUser {
  double recall = 0.0;
  double ndcg = 0.0;
};

// Runs fn(user) for every user, folding results in user order regardless of
// the worker count.
template <class Fn>
std::vector<PerUser> map_users(int64_t n_users, int64_t workers, const Fn& fn) {
  std::vector<PerUser> results(static_cast<size_t>(n_users));
  if (workers <= 1) {
    for (int64_t u = 0; u < n_users; ++u) results[static_cast<size_t>(u)] = fn(static_cast<int32_t>(u));
    return results;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        int64_t u = next.fetch_add(1);
        if (u >= n_users) return;
        try {
          results[static_cast<size_t>(u)] = fn(static_cast<int32_t>(u));
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

MetricReport fold_report(const std::vector<PerUser>& results, Scheme scheme, int64_t k,
                         uint64_t seed) {
  MetricReport report;
  report.scheme = scheme_name(scheme);
  report.k = k;
  report.users = static_cast<int64_t>(results.size());
  double recall = 0.0, ndcg = 0.0;
  for (const auto& r : results) {  // fixed fold order keeps sums bit-stable
    recall += r.recall;
    ndcg += r.ndcg;
  }
  if (report.users > 0) {
    report.recall = recall / static_cast<double>(report.users);
    report.ndcg = ndcg / static_cast<double>(report.users);
  }
  report.seed = seed;
  return report;
}

}  // namespace

MetricReport evaluate_model(const numerics::ParamStore& params, const model::ModelConfig& config,
                            const SplitDataset& dataset, const EvalOptions& options) {
  if (config.vocab_items != dataset.num_items()) {
    throw ConfigError("evaluate: checkpoint vocabulary (" + std::to_string(config.vocab_items) +
                      " items) does not match dataset (" + std::to_string(dataset.num_items()) +
                      " items)");
  }
  auto popularity = train_popularity(dataset);
  const int64_t n_users = static_cast<int64_t>(dataset.users.size());

  auto results = map_users(n_users, options.workers, [&](int32_t u) {
    const UserHistory& user = dataset.users[static_cast<size_t>(u)];
    const ingest::TimedItem& target =
        options.target_validation ? user.validation_item() : user.test_item();
    auto input_events = user.eval_input_events(!options.target_validation);
    ingest::SessionizedHistory history;
    history.user = u;
    history.sessions = ingest::sessionize(input_events);

    int64_t last_seen = input_events.back().timestamp;
    int64_t mask_time = options.mask_time_ground_truth ? target.timestamp : last_seen;
    bool new_session = mask_time - last_seen > kDaySeconds;
    auto input = model::build_input(history, config, model::BuildMode::infer, mask_time, new_session);

    numerics::Tape tape;
    auto logits = tape.value(model::forward(tape, input, params, config));
    int64_t mask_slot = config.max_len - 1;

    auto candidates =
        build_candidates(dataset, popularity, u, target.item, options.scheme, options.seed);
    std::vector<double> scores(candidates.items.size());
    for (size_t i = 0; i < candidates.items.size(); ++i) {
      scores[i] = logits.at(mask_slot, candidates.items[i] - kFirstItemId);
    }
    auto rank = rank_metrics(scores, candidates.truth_index, options.k);
    return PerUser{rank.recall, rank.ndcg};
  });
  return fold_report(results, options.scheme, options.k, options.seed);
}

MetricReport pop_baseline(const SplitDataset& dataset, Scheme scheme, int64_t k, uint64_t seed) {
  auto popularity = train_popularity(dataset);
  const int64_t n_users = static_cast<int64_t>(dataset.users.size());
  auto results = map_users(n_users, 1, [&](int32_t u) {
    const UserHistory& user = dataset.users[static_cast<size_t>(u)];
    auto candidates = build_candidates(dataset, popularity, u, user.test_item().item, scheme, seed);
    std::vector<double> scores(candidates.items.size());
    for (size_t i = 0; i < candidates.items.size(); ++i) {
      scores[i] = static_cast<double>(popularity[static_cast<size_t>(candidates.items[i] - kFirstItemId)]);
    }
    auto rank = rank_metrics(scores, candidates.truth_index, k);
    return PerUser{rank.recall, rank.ndcg};
  });
  return fold_report(results, scheme, k, seed);
}

}  // namespace sabrec::evaluation
