#include "model/model.hpp"

#include <cmath>

#include "common/errors.hpp"
#include "ingest/events.hpp"
#include "numerics/rng.hpp"

namespace sabrec::model {

using ingest::kDaySeconds;
using ingest::kMaskId;
using ingest::kPadId;
using ingest::kSessionTokenId;
using numerics::Rng;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kInitStd = 0.02;

// Periods from 0.1 day to 1e4 days, geometrically spaced.
std::vector<double> initial_omegas(int64_t d_t) {
  std::vector<double> omegas(static_cast<size_t>(d_t));
  const double lo = std::log(0.1), hi = std::log(1e4);
  for (int64_t k = 0; k < d_t; ++k) {
    double f = d_t == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(d_t - 1);
    double period = std::exp(lo + (hi - lo) * f);
    omegas[static_cast<size_t>(k)] = kTwoPi / period;
  }
  return omegas;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<int64_t>>> parameter_shapes(
    const ModelConfig& c) {
  c.validate();
  if (c.vocab_items < 1) throw ConfigError("parameter_shapes: vocab_items must be set");
  std::vector<std::pair<std::string, std::vector<int64_t>>> shapes;
  int64_t emb_rows = 2 + c.vocab_items + (c.use_st ? 1 : 0);
  shapes.emplace_back("item_embedding", std::vector<int64_t>{emb_rows, c.hidden});
  shapes.emplace_back("position_embedding", std::vector<int64_t>{c.max_len, c.hidden});
  if (c.use_sse) {
    shapes.emplace_back("segment_embedding", std::vector<int64_t>{c.max_segments, c.hidden});
  }
  if (c.use_tas) {
    shapes.emplace_back("temporal_omega", std::vector<int64_t>{c.temporal_dim});
    shapes.emplace_back("temporal_theta", std::vector<int64_t>{c.temporal_dim});
  }
  shapes.emplace_back("embed_norm_gain", std::vector<int64_t>{c.hidden});
  shapes.emplace_back("embed_norm_bias", std::vector<int64_t>{c.hidden});
  for (int64_t l = 0; l < c.layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    for (const char* w : {"attn_wq", "attn_wk", "attn_wv", "attn_wo"}) {
      shapes.emplace_back(p + w, std::vector<int64_t>{c.hidden, c.hidden});
    }
    for (const char* b : {"attn_bq", "attn_bk", "attn_bv", "attn_bo"}) {
      shapes.emplace_back(p + b, std::vector<int64_t>{c.hidden});
    }
    shapes.emplace_back(p + "attn_norm_gain", std::vector<int64_t>{c.hidden});
    shapes.emplace_back(p + "attn_norm_bias", std::vector<int64_t>{c.hidden});
    shapes.emplace_back(p + "ff_w1", std::vector<int64_t>{c.hidden, 4 * c.hidden});
    shapes.emplace_back(p + "ff_b1", std::vector<int64_t>{4 * c.hidden});
    shapes.emplace_back(p + "ff_w2", std::vector<int64_t>{4 * c.hidden, c.hidden});
    shapes.emplace_back(p + "ff_b2", std::vector<int64_t>{c.hidden});
    shapes.emplace_back(p + "ff_norm_gain", std::vector<int64_t>{c.hidden});
    shapes.emplace_back(p + "ff_norm_bias", std::vector<int64_t>{c.hidden});
  }
  shapes.emplace_back("out_transform_w", std::vector<int64_t>{c.hidden, c.hidden});
  shapes.emplace_back("out_transform_b", std::vector<int64_t>{c.hidden});
  shapes.emplace_back("out_norm_gain", std::vector<int64_t>{c.hidden});
  shapes.emplace_back("out_norm_bias", std::vector<int64_t>{c.hidden});
  shapes.emplace_back("item_bias", std::vector<int64_t>{c.vocab_items});
  return shapes;
}

int64_t num_parameters(const ModelConfig& config) {
  int64_t n = 0;
  for (const auto& [name, shape] : parameter_shapes(config)) {
    n += numerics::shape_numel(shape);
  }
  return n;
}

ParamStore init_params(const ModelConfig& config, uint64_t seed) {
  ParamStore store;
  for (const auto& [name, shape] : parameter_shapes(config)) {
    Tensor t = Tensor::zeros(shape);
    // Per-tensor stream keyed by name: init order never matters.
    Rng rng(numerics::mix_seed({seed, numerics::hash_str(name)}));
    bool is_weight = name.size() >= 10 && name.compare(name.size() - 10, 10, "_embedding") == 0;
    is_weight = is_weight || name.find("_w") != std::string::npos;
    if (name == "temporal_omega") {
      auto omegas = initial_omegas(config.temporal_dim);
      for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = omegas[static_cast<size_t>(i)];
    } else if (name.find("norm_gain") != std::string::npos) {
      for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = 1.0;
    } else if (is_weight) {
      for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.normal(0.0, kInitStd);
    }
    // Everything else (biases, theta) starts at zero.
    store.add(name, std::move(t));
  }
  return store;
}

Tensor temporal_encoding(int64_t t_seconds, const Tensor& omega, const Tensor& theta) {
  if (!omega.same_shape(theta) || omega.rank() != 1) {
    throw ShapeError("temporal_encoding: omega/theta must be equal-length vectors");
  }
  double t_days = static_cast<double>(t_seconds) / static_cast<double>(kDaySeconds);
  Tensor out = Tensor::zeros(omega.shape);
  for (int64_t k = 0; k < omega.numel(); ++k) {
    out.at(k) = std::cos(omega.at(k) * t_days + theta.at(k));
  }
  return out;
}

Value temporal_self_attention(Tape& tape, Value q, Value k, Value v,
                              std::optional<Value> te_q, std::optional<Value> te_k,
                              const Tensor& attend_mask, AttentionTrace* trace) {
  if (te_q.has_value() != te_k.has_value()) {
    throw ConfigError("temporal_self_attention: temporal encodings must be given for both sides");
  }
  int64_t d_head = tape.value(q).extent(1);
  int64_t d_t = 0;
  Value qe = q, ke = k;
  if (te_q) {
    d_t = tape.value(*te_q).extent(1);
    qe = tape.concat_last_dim(q, *te_q);
    ke = tape.concat_last_dim(k, *te_k);
  }
  Value logits = tape.matmul_nt(qe, ke);
  if (trace) {
    trace->q_ext = tape.value(qe);
    trace->k_ext = tape.value(ke);
    trace->logits_unscaled = tape.value(logits);
  }
  Value scaled = tape.scale(logits, 1.0 / std::sqrt(static_cast<double>(d_head + d_t)));
  Value weights = tape.softmax_masked(scaled, attend_mask);
  return tape.matmul(weights, v);
}

int64_t embedding_row(int32_t token_id, const ModelConfig& config) {
  if (token_id == kPadId || token_id == kMaskId) return token_id;
  if (token_id == kSessionTokenId) {
    if (!config.use_st) {
      throw ConfigError("forward: session token present but use_st is off");
    }
    return 2 + config.vocab_items;
  }
  return token_id - 1;  // items occupy rows 2 .. vocab_items + 1
}

Value forward(Tape& tape, const ModelInput& input, const ParamStore& params,
              const ModelConfig& config, ForwardTrace* trace) {
  config.validate();
  if (config.vocab_items < 1) throw ConfigError("forward: vocab_items must be set");
  const int64_t n = input.length();
  if (n != config.max_len) {
    throw ShapeError("forward: input length " + std::to_string(n) + " does not match max_len " +
                     std::to_string(config.max_len));
  }

  std::vector<int64_t> emb_rows(static_cast<size_t>(n));
  std::vector<int64_t> pos_rows(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    int32_t id = input.item_ids[static_cast<size_t>(i)];
    if (id < 0 || id >= config.vocab_size()) {
      throw ConfigError("forward: token id " + std::to_string(id) + " outside vocabulary of " +
                        std::to_string(config.vocab_size()));
    }
    emb_rows[static_cast<size_t>(i)] = embedding_row(id, config);
    pos_rows[static_cast<size_t>(i)] = input.positions[static_cast<size_t>(i)];
  }

  Value emb_table = tape.param("item_embedding", params.at("item_embedding"));
  Value x = tape.embedding_gather(emb_table, emb_rows);
  {
    Value pe = tape.param("position_embedding", params.at("position_embedding"));
    x = tape.add(x, tape.embedding_gather(pe, pos_rows));
  }
  if (config.use_sse) {
    std::vector<int64_t> seg_rows(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
      int32_t s = input.segment_ids[static_cast<size_t>(i)];
      if (s < 0 || s > config.max_segments) {
        throw ConfigError("forward: segment id " + std::to_string(s) + " outside 0.." +
                          std::to_string(config.max_segments));
      }
      seg_rows[static_cast<size_t>(i)] = s - 1;  // padding (0) maps to the zero row
    }
    Value sse = tape.param("segment_embedding", params.at("segment_embedding"));
    x = tape.add(x, tape.embedding_gather(sse, seg_rows));
  }
  x = tape.layer_norm(x, tape.param("embed_norm_gain", params.at("embed_norm_gain")),
                      tape.param("embed_norm_bias", params.at("embed_norm_bias")));

  std::optional<Value> te;
  if (config.use_tas) {
    std::vector<double> t_days(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
      t_days[static_cast<size_t>(i)] =
          static_cast<double>(input.timestamps[static_cast<size_t>(i)]) /
          static_cast<double>(kDaySeconds);
    }
    Value omega = tape.param("temporal_omega", params.at("temporal_omega"));
    Value theta = tape.param("temporal_theta", params.at("temporal_theta"));
    te = tape.cosine(tape.outer_affine(t_days, omega, theta));
    if (trace) trace->te = tape.value(*te);
  }

  // Keys at padding are excluded; every query keeps its own diagonal so that
  // padded rows stay well-defined without leaking into real positions.
  Tensor attn_mask = Tensor::zeros({n, n});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      attn_mask.at(i, j) = (input.attend[static_cast<size_t>(j)] || i == j) ? 1.0 : 0.0;
    }
  }

  const int64_t d_head = config.head_dim();
  if (trace) trace->layers.resize(static_cast<size_t>(config.layers));
  for (int64_t l = 0; l < config.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    auto par = [&](const std::string& s) { return tape.param(p + s, params.at(p + s)); };
    Value q = tape.add_rowwise(tape.matmul(x, par("attn_wq")), par("attn_bq"));
    Value k = tape.add_rowwise(tape.matmul(x, par("attn_wk")), par("attn_bk"));
    Value v = tape.add_rowwise(tape.matmul(x, par("attn_wv")), par("attn_bv"));
    if (trace) trace->layers[static_cast<size_t>(l)].resize(static_cast<size_t>(config.heads));
    Value heads_out;
    for (int64_t h = 0; h < config.heads; ++h) {
      Value qh = tape.slice_cols(q, h * d_head, d_head);
      Value kh = tape.slice_cols(k, h * d_head, d_head);
      Value vh = tape.slice_cols(v, h * d_head, d_head);
      AttentionTrace* head_trace =
          trace ? &trace->layers[static_cast<size_t>(l)][static_cast<size_t>(h)] : nullptr;
      Value oh = temporal_self_attention(tape, qh, kh, vh, te, te, attn_mask, head_trace);
      heads_out = h == 0 ? oh : tape.concat_last_dim(heads_out, oh);
    }
    Value o = tape.add_rowwise(tape.matmul(heads_out, par("attn_wo")), par("attn_bo"));
    x = tape.layer_norm(tape.add(x, o), par("attn_norm_gain"), par("attn_norm_bias"));
    Value f = tape.gelu(tape.add_rowwise(tape.matmul(x, par("ff_w1")), par("ff_b1")));
    f = tape.add_rowwise(tape.matmul(f, par("ff_w2")), par("ff_b2"));
    x = tape.layer_norm(tape.add(x, f), par("ff_norm_gain"), par("ff_norm_bias"));
  }

  Value h = tape.gelu(tape.add_rowwise(tape.matmul(x, tape.param("out_transform_w", params.at("out_transform_w"))),
                                       tape.param("out_transform_b", params.at("out_transform_b"))));
  h = tape.layer_norm(h, tape.param("out_norm_gain", params.at("out_norm_gain")),
                      tape.param("out_norm_bias", params.at("out_norm_bias")));
  // Output projection tied to the item rows of the embedding table.
  Value item_rows = tape.slice_rows(emb_table, 2, config.vocab_items);
  Value logits = tape.add_rowwise(tape.matmul_nt(h, item_rows),
                                  tape.param("item_bias", params.at("item_bias")));
  return logits;
}

Tensor forward_logits(const ModelInput& input, const ParamStore& params,
                      const ModelConfig& config, ForwardTrace* trace) {
  Tape tape;
  Value logits = forward(tape, input, params, config, trace);
  return tape.value(logits);
}

}  // namespace sabrec::model
