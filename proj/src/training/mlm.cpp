#include "training/mlm.hpp"

#include "common/errors.hpp"
#include "ingest/events.hpp"

namespace sabrec::training {

using ingest::kFirstItemId;
using ingest::kMaskId;

MlmExample apply_mlm_mask(const std::vector<int32_t>& item_ids, double p_mask,
                          numerics::Rng& rng) {
  MlmExample out;
  out.masked_ids = item_ids;
  out.labels.assign(item_ids.size(), -1);
  out.label_mask.assign(item_ids.size(), 0);

  std::vector<size_t> eligible;
  for (size_t i = 0; i < item_ids.size(); ++i) {
    if (item_ids[i] >= kFirstItemId) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw ConfigError("apply_mlm_mask: sequence has no real item tokens");
  }

  for (size_t i : eligible) {
    if (rng.uniform() < p_mask) {
      out.labels[i] = item_ids[i] - kFirstItemId;
      out.label_mask[i] = 1;
      out.masked_ids[i] = kMaskId;
      ++out.masked_count;
    }
  }
  if (out.masked_count == 0) {
    size_t i = eligible[static_cast<size_t>(rng.uniform_int(eligible.size()))];
    out.labels[i] = item_ids[i] - kFirstItemId;
    out.label_mask[i] = 1;
    out.masked_ids[i] = kMaskId;
    out.masked_count = 1;
  }
  return out;
}

}  // namespace sabrec::training
