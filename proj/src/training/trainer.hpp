#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "evaluation/evaluate.hpp"
#include "ingest/preprocess.hpp"
#include "model/config.hpp"
#include "training/checkpoint.hpp"

namespace sabrec::training {

struct TrainConfig {
  int64_t batch_size = 128;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t max_epochs = 100;
  int64_t patience = 5;          // non-improving validation epochs before stopping
  uint64_t seed = 42;
  int64_t workers = 1;
  std::string val_scheme = "random";
  int64_t val_k = 10;
  bool checkpoint_f32 = false;
  bool log_wall_time = false;    // keep epoch logs byte-reproducible by default

  void validate() const;
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct EpochLog {
  int64_t epoch = 0;
  double train_loss = 0.0;
  double val_ndcg10 = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  int64_t best_epoch = 0;
  double best_val = 0.0;
};

std::string epoch_log_csv(const std::vector<EpochLog>& log);

// Masked-item training over per-user sequences with per-epoch validation on
// the held-out validation items; keeps the best-validation parameters and
// stops after `patience` epochs without improvement. Deterministic for a
// given (dataset, configs), independent of the worker count.
TrainResult train(const ingest::SplitDataset& dataset, model::ModelConfig model_config,
                  const TrainConfig& train_config);

}  // namespace sabrec::training
