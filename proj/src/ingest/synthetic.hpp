#pragma once

#include <cstdint>

#include "ingest/preprocess.hpp"

namespace sabrec::ingest {

// Generator for a desk-scale dataset with a planted session structure.
//
// Items form `clusters` groups of `items_per_cluster` each. A session walks
// its cluster's items cyclically; consecutive sessions advance the cluster by
// one and keep the walk phase. The final (test) interaction either continues
// the last session (small gap, same cluster) or opens a new session (gap
// above the one-day threshold, next cluster) with equal probability. The two
// candidate targets are distinct items, so a model that cannot see session
// boundaries or time gaps has to hedge between them, while one that can
// resolves the branch exactly.
struct SyntheticConfig {
  int64_t users = 500;
  int64_t clusters = 12;
  int64_t items_per_cluster = 5;
  int64_t min_sessions = 3;   // complete sessions before the test transition
  int64_t max_sessions = 5;
  double session_continue_prob = 0.5;  // chance to extend a session past 2 items
  double new_session_prob = 0.5;       // chance the test item opens a session
};

SplitDataset make_synthetic_dataset(const SyntheticConfig& config, uint64_t seed);

}  // namespace sabrec::ingest
