#include "ingest/synthetic.hpp"

#include <cstdio>

#include "common/errors.hpp"
#include "numerics/rng.hpp"

namespace sabrec::ingest {

using numerics::Rng;
using numerics::mix_seed;

SplitDataset make_synthetic_dataset(const SyntheticConfig& cfg, uint64_t seed) {
  if (cfg.users < 1 || cfg.clusters < 2 || cfg.items_per_cluster < 2) {
    throw ConfigError("synthetic dataset: need >= 1 user, >= 2 clusters, >= 2 items per cluster");
  }
  if (cfg.min_sessions < 2 || cfg.max_sessions < cfg.min_sessions) {
    throw ConfigError("synthetic dataset: invalid session count range");
  }

  SplitDataset out;
  const int64_t num_items = cfg.clusters * cfg.items_per_cluster;
  out.item_names.reserve(static_cast<size_t>(num_items));
  for (int64_t i = 0; i < num_items; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "i%04lld", static_cast<long long>(i));
    out.item_names.emplace_back(buf);
  }

  auto item_of = [&](int64_t cluster, int64_t phase) -> int32_t {
    cluster = ((cluster % cfg.clusters) + cfg.clusters) % cfg.clusters;
    phase = ((phase % cfg.items_per_cluster) + cfg.items_per_cluster) % cfg.items_per_cluster;
    return static_cast<int32_t>(kFirstItemId + cluster * cfg.items_per_cluster + phase);
  };

  constexpr int64_t kBaseTime = 1400000000;  // arbitrary 2014 epoch

  out.users.reserve(static_cast<size_t>(cfg.users));
  for (int64_t u = 0; u < cfg.users; ++u) {
    Rng rng(mix_seed({seed, 0x5a17u, static_cast<uint64_t>(u)}));
    UserHistory h;
    h.user = static_cast<int32_t>(u);
    h.user_raw = std::to_string(u);

    int64_t t = kBaseTime + static_cast<int64_t>(rng.uniform_int(730 * kDaySeconds));
    int64_t n_sessions =
        cfg.min_sessions + static_cast<int64_t>(rng.uniform_int(
                               static_cast<uint64_t>(cfg.max_sessions - cfg.min_sessions + 1)));
    int64_t cluster = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(cfg.clusters)));
    int64_t phase = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(cfg.items_per_cluster)));

    auto small_gap = [&]() { return 60 + static_cast<int64_t>(rng.uniform_int(1741)); };
    auto session_gap = [&]() {
      // 1.2 to 2.8 days, always above the one-day sessionization threshold.
      return (12 * kDaySeconds) / 10 + static_cast<int64_t>(rng.uniform_int(138241));
    };

    for (int64_t s = 0; s < n_sessions; ++s) {
      if (s > 0) {
        t += session_gap();
        cluster += 1;
        phase += 1;
      }
      int64_t length = 2;
      while (rng.uniform() < cfg.session_continue_prob) ++length;
      for (int64_t i = 0; i < length; ++i) {
        if (i > 0) {
          t += small_gap();
          phase += 1;
        }
        h.events.push_back({item_of(cluster, phase), t});
      }
    }

    // Test transition: same walk, branch observable only through the gap.
    if (rng.uniform() < cfg.new_session_prob) {
      t += session_gap();
      cluster += 1;
    } else {
      t += small_gap();
    }
    phase += 1;
    h.events.push_back({item_of(cluster, phase), t});

    out.users.push_back(std::move(h));
  }
  return out;
}

}  // namespace sabrec::ingest
