#pragma once

#include <cstdint>
#include <vector>

#include "numerics/rng.hpp"

namespace sabrec::training {

struct MlmExample {
  std::vector<int32_t> masked_ids;  // token ids with selected items replaced by the mask token
  std::vector<int64_t> labels;      // class index (item id - 3) at masked slots, -1 elsewhere
  std::vector<uint8_t> label_mask;  // 1 at masked slots
  int64_t masked_count = 0;
};

// Independently replaces each real item token with the mask token with
// probability p_mask. Padding, mask and session tokens are never selected.
// If no position gets selected, one eligible position is forced so every
// training example carries at least one prediction.
MlmExample apply_mlm_mask(const std::vector<int32_t>& item_ids, double p_mask,
                          numerics::Rng& rng);

}  // namespace sabrec::training
