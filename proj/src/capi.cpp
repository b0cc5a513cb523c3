#include "sabrec/sabrec.h"

#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "common/errors.hpp"
#include "evaluation/evaluate.hpp"
#include "ingest/dataset_io.hpp"
#include "ingest/parsers.hpp"
#include "ingest/preprocess.hpp"
#include "ingest/synthetic.hpp"
#include "model/config.hpp"
#include "training/checkpoint.hpp"
#include "training/trainer.hpp"

using nlohmann::json;

struct sabrec_dataset {
  sabrec::ingest::SplitDataset data;
};

namespace {

thread_local std::string g_last_error;

sabrec_status set_error(sabrec_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <class Fn>
sabrec_status wrap(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SABREC_OK;
  } catch (const sabrec::ShapeError& e) {
    return set_error(SABREC_ERR_INVALID_ARG, e.what());
  } catch (const sabrec::NumericError& e) {
    return set_error(SABREC_ERR_NUMERIC, e.what());
  } catch (const sabrec::ParseError& e) {
    return set_error(SABREC_ERR_PARSE, e.what());
  } catch (const sabrec::IoError& e) {
    return set_error(SABREC_ERR_IO, e.what());
  } catch (const sabrec::ConfigError& e) {
    return set_error(SABREC_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return set_error(SABREC_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(SABREC_ERR_INTERNAL, "unknown error");
  }
}

const char* require_cstr(const char* s, const char* what) {
  if (!s) throw sabrec::ConfigError(std::string(what) + " must not be NULL");
  return s;
}

json parse_json(const char* text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw sabrec::ConfigError(std::string(what) + ": invalid JSON");
  return j;
}

sabrec::model::ModelConfig resolve_model_config(const char* model_config_json,
                                                const sabrec_dataset* dataset) {
  auto config = sabrec::model::ModelConfig::from_json(
      parse_json(require_cstr(model_config_json, "model config"), "model config"));
  if (dataset && config.vocab_items == 0) {
    config.vocab_items = dataset->data.num_items();
  }
  return config;
}

}  // namespace

extern "C" {

const char* sabrec_version(void) { return "0.1.0"; }

const char* sabrec_last_error(void) { return g_last_error.c_str(); }

sabrec_status sabrec_preprocess(const char* input_path, const char* format, const char* out_dir) {
  return wrap([&] {
    auto events = sabrec::ingest::parse_events(require_cstr(input_path, "input path"),
                                               require_cstr(format, "format"));
    auto dataset = sabrec::ingest::preprocess(events);
    sabrec::ingest::save_dataset(require_cstr(out_dir, "output directory"), dataset);
  });
}

sabrec_status sabrec_synthesize(const char* config_json, const char* out_dir) {
  return wrap([&] {
    sabrec::ingest::SyntheticConfig config;
    uint64_t seed = 1;
    if (config_json) {
      json j = parse_json(config_json, "synthetic config");
      config.users = j.value("users", config.users);
      config.clusters = j.value("clusters", config.clusters);
      config.items_per_cluster = j.value("items_per_cluster", config.items_per_cluster);
      config.min_sessions = j.value("min_sessions", config.min_sessions);
      config.max_sessions = j.value("max_sessions", config.max_sessions);
      seed = j.value("seed", seed);
    }
    auto dataset = sabrec::ingest::make_synthetic_dataset(config, seed);
    sabrec::ingest::save_dataset(require_cstr(out_dir, "output directory"), dataset);
  });
}

sabrec_status sabrec_dataset_open(const char* dir, sabrec_dataset** out) {
  return wrap([&] {
    require_cstr(dir, "dataset directory");
    if (!out) throw sabrec::ConfigError("output handle must not be NULL");
    auto handle = std::make_unique<sabrec_dataset>();
    handle->data = sabrec::ingest::load_dataset(dir);
    *out = handle.release();
  });
}

void sabrec_dataset_close(sabrec_dataset* dataset) { delete dataset; }

sabrec_status sabrec_dataset_counts(const sabrec_dataset* dataset, int64_t* users, int64_t* items,
                                    int64_t* events) {
  return wrap([&] {
    if (!dataset) throw sabrec::ConfigError("dataset handle must not be NULL");
    if (users) *users = static_cast<int64_t>(dataset->data.users.size());
    if (items) *items = dataset->data.num_items();
    if (events) *events = dataset->data.num_events();
  });
}

sabrec_status sabrec_num_parameters(const char* model_config_json, const sabrec_dataset* dataset,
                                    int64_t* out) {
  return wrap([&] {
    if (!out) throw sabrec::ConfigError("output pointer must not be NULL");
    auto config = resolve_model_config(model_config_json, dataset);
    *out = sabrec::model::num_parameters(config);
  });
}

sabrec_status sabrec_train(const sabrec_dataset* dataset, const char* model_config_json,
                           const char* train_config_json, const char* checkpoint_path,
                           const char* epoch_log_path) {
  return wrap([&] {
    if (!dataset) throw sabrec::ConfigError("dataset handle must not be NULL");
    auto model_config = resolve_model_config(model_config_json, dataset);
    auto train_config = sabrec::training::TrainConfig::from_json(
        parse_json(require_cstr(train_config_json, "train config"), "train config"));
    auto result = sabrec::training::train(dataset->data, model_config, train_config);
    sabrec::training::save_checkpoint(require_cstr(checkpoint_path, "checkpoint path"),
                                      result.best);
    if (epoch_log_path) {
      std::ofstream log(epoch_log_path, std::ios::binary | std::ios::trunc);
      if (!log) throw sabrec::IoError(std::string("cannot create epoch log: ") + epoch_log_path);
      log << sabrec::training::epoch_log_csv(result.log);
    }
  });
}

sabrec_status sabrec_evaluate(const sabrec_dataset* dataset, const char* checkpoint_path,
                              const char* scheme, int32_t k, uint64_t seed, int32_t workers,
                              const char* infer_time_mode, sabrec_metrics* out) {
  return wrap([&] {
    if (!dataset) throw sabrec::ConfigError("dataset handle must not be NULL");
    if (!out) throw sabrec::ConfigError("output pointer must not be NULL");
    auto checkpoint =
        sabrec::training::load_checkpoint(require_cstr(checkpoint_path, "checkpoint path"));
    auto config = sabrec::model::ModelConfig::from_json_text(checkpoint.config_json);

    sabrec::evaluation::EvalOptions options;
    options.scheme = sabrec::evaluation::scheme_from_string(require_cstr(scheme, "scheme"));
    options.k = k;
    options.seed = seed;
    options.workers = workers < 1 ? 1 : workers;
    if (infer_time_mode) {
      std::string mode = infer_time_mode;
      if (mode == "target") {
        options.mask_time_ground_truth = true;
      } else if (mode == "last") {
        options.mask_time_ground_truth = false;
      } else {
        throw sabrec::ConfigError("infer_time_mode must be 'target' or 'last', got '" + mode + "'");
      }
    }
    auto report = sabrec::evaluation::evaluate_model(checkpoint.params, config, dataset->data,
                                                     options);
    out->recall = report.recall;
    out->ndcg = report.ndcg;
    out->users = report.users;
  });
}

sabrec_status sabrec_pop_baseline(const sabrec_dataset* dataset, const char* scheme, int32_t k,
                                  uint64_t seed, sabrec_metrics* out) {
  return wrap([&] {
    if (!dataset) throw sabrec::ConfigError("dataset handle must not be NULL");
    if (!out) throw sabrec::ConfigError("output pointer must not be NULL");
    auto report = sabrec::evaluation::pop_baseline(
        dataset->data, sabrec::evaluation::scheme_from_string(require_cstr(scheme, "scheme")), k,
        seed);
    out->recall = report.recall;
    out->ndcg = report.ndcg;
    out->users = report.users;
  });
}

}  // extern "C"
