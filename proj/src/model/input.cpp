#include "model/input.hpp"

#include <algorithm>

#include "common/errors.hpp"

namespace sabrec::model {

using ingest::kMaskId;
using ingest::kPadId;
using ingest::kSessionTokenId;

ModelInput build_input(const ingest::SessionizedHistory& history, const ModelConfig& config,
                       BuildMode mode, int64_t infer_timestamp, bool infer_new_session) {
  config.validate();
  int64_t total_items = 0;
  for (const auto& s : history.sessions) total_items += static_cast<int64_t>(s.size());
  if (total_items == 0) throw ConfigError("build_input: history is empty");

  struct Token {
    int32_t id;
    int64_t timestamp;
    int32_t segment;
  };
  std::vector<Token> tokens;
  tokens.reserve(static_cast<size_t>(total_items) + history.sessions.size() + 2);

  const bool infer = mode == BuildMode::infer;
  const int64_t n_sessions = static_cast<int64_t>(history.sessions.size());
  // Counting the virtual new session shifts every real session one step back.
  const int64_t total_sessions = n_sessions + ((infer && infer_new_session) ? 1 : 0);

  for (int64_t j = 0; j < n_sessions; ++j) {
    const auto& session = history.sessions[static_cast<size_t>(j)];
    if (session.empty()) throw ConfigError("build_input: empty session in history");
    auto segment = static_cast<int32_t>(std::min<int64_t>(total_sessions - j, config.max_segments));
    if (config.use_st && j > 0) {
      tokens.push_back({kSessionTokenId, session.front().timestamp, segment});
    }
    for (const auto& e : session) {
      tokens.push_back({e.item, e.timestamp, segment});
    }
  }

  if (infer) {
    int64_t last_seen = tokens.back().timestamp;
    if (infer_timestamp < last_seen) {
      throw ConfigError("build_input: infer_timestamp precedes the last observed event");
    }
    if (infer_new_session && config.use_st) {
      tokens.push_back({kSessionTokenId, infer_timestamp, 1});
    }
    tokens.push_back({kMaskId, infer_timestamp, 1});
  }

  const int64_t out_len = config.max_len;
  if (static_cast<int64_t>(tokens.size()) > out_len) {
    tokens.erase(tokens.begin(), tokens.end() - static_cast<long>(out_len));
  }
  const int64_t pad = out_len - static_cast<int64_t>(tokens.size());

  ModelInput input;
  input.item_ids.assign(static_cast<size_t>(out_len), kPadId);
  input.positions.resize(static_cast<size_t>(out_len));
  input.segment_ids.assign(static_cast<size_t>(out_len), 0);
  input.timestamps.assign(static_cast<size_t>(out_len), 0);
  input.attend.assign(static_cast<size_t>(out_len), 0);
  for (int64_t i = 0; i < out_len; ++i) {
    input.positions[static_cast<size_t>(i)] = static_cast<int32_t>(i);
  }
  for (size_t i = 0; i < tokens.size(); ++i) {
    size_t slot = static_cast<size_t>(pad) + i;
    input.item_ids[slot] = tokens[i].id;
    input.timestamps[slot] = tokens[i].timestamp;
    input.segment_ids[slot] = tokens[i].segment;
    input.attend[slot] = 1;
  }
  return input;
}

}  // namespace sabrec::model
