#include "evaluation/metrics.hpp"

#include <cmath>

#include "common/errors.hpp"

namespace sabrec::evaluation {

Scheme scheme_from_string(const std::string& s) {
  if (s == "random") return Scheme::random;
  if (s == "popular") return Scheme::popular;
  if (s == "all") return Scheme::all;
  throw ConfigError("unknown candidate scheme '" + s + "' (expected random, popular or all)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::random: return "random";
    case Scheme::popular: return "popular";
    case Scheme::all: return "all";
  }
  return "?";
}

RankResult rank_metrics(const std::vector<double>& scores, size_t truth_index, int64_t k) {
  if (truth_index >= scores.size()) {
    throw ConfigError("rank_metrics: ground truth missing from scored candidates");
  }
  double truth = scores[truth_index];
  int64_t rank = 1;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (i == truth_index) continue;
    if (scores[i] >= truth) ++rank;
  }
  RankResult r;
  r.rank = rank;
  if (rank <= k) {
    r.recall = 1.0;
    r.ndcg = 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  }
  return r;
}

}  // namespace sabrec::evaluation
