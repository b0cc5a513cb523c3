#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace sabrec::model {

// All hyper-parameters and feature flags. `vocab_items` counts real items
// only; token ids 0 (padding), 1 (mask) and 2 (session token) are reserved on
// top of it.
struct ModelConfig {
  int64_t max_len = 0;       // sequence length L
  int64_t hidden = 0;        // representation width
  int64_t layers = 0;        // encoder depth
  int64_t heads = 0;         // attention heads
  double mask_prob = 0.2;    // training mask probability
  int64_t max_segments = 5;  // most recent sessions kept distinct (clamp beyond)
  int64_t temporal_dim = 8;  // temporal encoding width
  bool use_st = false;       // session token between sessions
  bool use_sse = false;      // session segment embedding
  bool use_tas = false;      // temporal self-attention
  int64_t vocab_items = 0;   // real item count; 0 means "fill from dataset"

  int64_t head_dim() const { return hidden / heads; }
  int64_t vocab_size() const { return vocab_items + 3; }

  void validate() const;

  static ModelConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static ModelConfig from_json_text(const std::string& text);
};

}  // namespace sabrec::model
