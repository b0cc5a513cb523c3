#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sabrec::evaluation {

enum class Scheme { random, popular, all };

Scheme scheme_from_string(const std::string& s);
std::string scheme_name(Scheme s);

struct RankResult {
  int64_t rank = 0;     // 1-based; ties rank the ground truth last
  double recall = 0.0;  // 1 if rank <= k
  double ndcg = 0.0;    // 1 / log2(rank + 1) if rank <= k
};

// Pessimistic tie-breaking: rank = 1 + |{scores > truth}| + |{other scores ==
// truth}|. `truth_index` selects the ground-truth entry of `scores`.
RankResult rank_metrics(const std::vector<double>& scores, size_t truth_index, int64_t k);

struct MetricReport {
  std::string scheme;
  int64_t k = 10;
  double recall = 0.0;
  double ndcg = 0.0;
  int64_t users = 0;
  uint64_t seed = 0;
};

}  // namespace sabrec::evaluation
