#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "model/config.hpp"
#include "model/input.hpp"
#include "numerics/gradcheck.hpp"
#include "numerics/param_store.hpp"
#include "numerics/tape.hpp"
#include "numerics/tensor.hpp"

namespace sabrec::model {

using numerics::GradMap;
using numerics::ParamStore;
using numerics::Tape;
using numerics::Tensor;
using numerics::Value;

// Parameter tensors in creation order. The count of every tensor depends only
// on the config, so the total is a pure function of it; the session token row,
// the segment table and the temporal parameters exist only when their flag is
// on (+hidden, +max_segments*hidden and +2*temporal_dim respectively).
std::vector<std::pair<std::string, std::vector<int64_t>>> parameter_shapes(
    const ModelConfig& config);

int64_t num_parameters(const ModelConfig& config);

ParamStore init_params(const ModelConfig& config, uint64_t seed);

// Cosine temporal encoding of a timestamp, evaluated in days.
// Component k is cos(omega_k * t_days + theta_k).
Tensor temporal_encoding(int64_t t_seconds, const Tensor& omega, const Tensor& theta);

// Captured per-head attention internals for verification.
struct AttentionTrace {
  Tensor q_ext;             // per-head query, temporal encoding concatenated when present
  Tensor k_ext;             // per-head key, likewise
  Tensor logits_unscaled;   // q_ext . k_ext^T before scaling
};

struct ForwardTrace {
  Tensor te;  // shared temporal encodings per position; empty without use_tas
  std::vector<std::vector<AttentionTrace>> layers;  // [layer][head]
};

// Scaled dot-product attention with optional temporal extension: queries and
// keys are extended with the (shared, unprojected) temporal encodings, values
// are not. The scale is 1/sqrt(d_head + d_T). attend_mask entries equal to 0
// remove a key column; shape [n] or [n, n].
Value temporal_self_attention(Tape& tape, Value q, Value k, Value v,
                              std::optional<Value> te_q, std::optional<Value> te_k,
                              const Tensor& attend_mask, AttentionTrace* trace = nullptr);

// Full encoder forward for one sequence: logits per position over real items
// (column j scores item id j + 3). Pure function of (input, params).
Value forward(Tape& tape, const ModelInput& input, const ParamStore& params,
              const ModelConfig& config, ForwardTrace* trace = nullptr);

// Convenience wrapper running its own tape.
Tensor forward_logits(const ModelInput& input, const ParamStore& params,
                      const ModelConfig& config, ForwardTrace* trace = nullptr);

// Embedding-table row for a token id (the session token row sits last).
int64_t embedding_row(int32_t token_id, const ModelConfig& config);

}  // namespace sabrec::model
