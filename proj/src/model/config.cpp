#include "model/config.hpp"

#include "common/errors.hpp"

namespace sabrec::model {

using nlohmann::json;

void ModelConfig::validate() const {
  if (max_len < 2) throw ConfigError("model config: max_len must be >= 2");
  if (hidden < 1 || layers < 1 || heads < 1) {
    throw ConfigError("model config: hidden, layers and heads must be positive");
  }
  if (hidden % heads != 0) {
    throw ConfigError("model config: hidden (" + std::to_string(hidden) +
                      ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
  if (!(mask_prob > 0.0 && mask_prob < 1.0)) {
    throw ConfigError("model config: mask_prob must be in (0, 1)");
  }
  if (max_segments < 1) throw ConfigError("model config: max_segments must be >= 1");
  if (use_tas && temporal_dim < 1) {
    throw ConfigError("model config: temporal_dim must be >= 1 when use_tas is set");
  }
}

ModelConfig ModelConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config: expected a JSON object");
  std::string missing;
  for (const char* key : {"max_len", "hidden", "layers", "heads"}) {
    if (!j.contains(key)) missing += missing.empty() ? key : std::string(", ") + key;
  }
  if (!missing.empty()) throw ConfigError("model config: missing keys: " + missing);

  ModelConfig c;
  try {
    c.max_len = j.at("max_len").get<int64_t>();
    c.hidden = j.at("hidden").get<int64_t>();
    c.layers = j.at("layers").get<int64_t>();
    c.heads = j.at("heads").get<int64_t>();
    c.mask_prob = j.value("mask_prob", c.mask_prob);
    c.max_segments = j.value("max_segments", c.max_segments);
    c.temporal_dim = j.value("temporal_dim", c.temporal_dim);
    c.use_st = j.value("use_st", false);
    c.use_sse = j.value("use_sse", false);
    c.use_tas = j.value("use_tas", false);
    c.vocab_items = j.value("vocab_items", static_cast<int64_t>(0));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

json ModelConfig::to_json() const {
  return json{{"max_len", max_len},
              {"hidden", hidden},
              {"layers", layers},
              {"heads", heads},
              {"mask_prob", mask_prob},
              {"max_segments", max_segments},
              {"temporal_dim", temporal_dim},
              {"use_st", use_st},
              {"use_sse", use_sse},
              {"use_tas", use_tas},
              {"vocab_items", vocab_items}};
}

ModelConfig ModelConfig::from_json_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("model config: invalid JSON");
  return from_json(j);
}

}  // namespace sabrec::model
