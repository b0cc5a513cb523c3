#pragma once

#include <cstdint>
#include <vector>

#include "ingest/events.hpp"
#include "model/config.hpp"

namespace sabrec::model {

// Fixed-length encoded sequence. Padding sits on the left; the most recent
// token occupies the last slot. Segment ids count sessions from the end:
// 1 = current session, clamped at max_segments for older ones, 0 = padding.
struct ModelInput {
  std::vector<int32_t> item_ids;
  std::vector<int32_t> positions;
  std::vector<int32_t> segment_ids;
  std::vector<int64_t> timestamps;
  std::vector<uint8_t> attend;

  int64_t length() const { return static_cast<int64_t>(item_ids.size()); }
};

enum class BuildMode { train, infer };

// Flattens a session history into a model input. With use_st a session token
// is inserted between sessions, inheriting the timestamp and segment of the
// following session. In infer mode a mask token carrying infer_timestamp is
// appended; infer_new_session additionally opens a fresh segment (and, with
// use_st, a leading session token), signalling that the predicted item
// starts a new session.
ModelInput build_input(const ingest::SessionizedHistory& history, const ModelConfig& config,
                       BuildMode mode, int64_t infer_timestamp = 0,
                       bool infer_new_session = false);

}  // namespace sabrec::model
