#pragma once

#include <cstdint>
#include <vector>

#include "evaluation/metrics.hpp"
#include "ingest/preprocess.hpp"
#include "model/config.hpp"
#include "numerics/param_store.hpp"

namespace sabrec::evaluation {

struct CandidateSet {
  std::vector<int32_t> items;  // internal item ids; ground truth included once
  size_t truth_index = 0;
};

// Interaction counts over the training portion only (test and validation
// items excluded), indexed by item id - 3.
std::vector<int64_t> train_popularity(const ingest::SplitDataset& dataset);

// random: 100 sampled negatives outside the user's history, plus the truth.
// popular: the 100 most popular items outside the user's history and distinct
// from the truth, plus the truth. all: the whole item vocabulary.
// Sampling is seeded by (seed, user) so candidate sets are reproducible.
CandidateSet build_candidates(const ingest::SplitDataset& dataset,
                              const std::vector<int64_t>& popularity, int32_t user,
                              int32_t truth_item, Scheme scheme, uint64_t seed);

struct EvalOptions {
  Scheme scheme = Scheme::random;
  int64_t k = 10;
  uint64_t seed = 0;
  int64_t workers = 1;
  bool target_validation = false;     // rank the validation item instead of the test item
  bool mask_time_ground_truth = true; // mask token carries the target's timestamp;
                                      // otherwise the last observed one
};

// Masked next-item evaluation: for each user the input history (validation
// item included when targeting test) ends in a mask token whose scores rank
// the candidate set.
MetricReport evaluate_model(const numerics::ParamStore& params, const model::ModelConfig& config,
                            const ingest::SplitDataset& dataset, const EvalOptions& options);

// Popularity-score baseline under the same protocol.
MetricReport pop_baseline(const ingest::SplitDataset& dataset, Scheme scheme, int64_t k,
                          uint64_t seed);

}  // namespace sabrec::evaluation
