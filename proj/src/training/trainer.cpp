#include "training/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "common/errors.hpp"
#include "model/input.hpp"
#include "model/model.hpp"
#include "numerics/rng.hpp"
#include "training/adamw.hpp"
#include "training/mlm.hpp"

namespace sabrec::training {

using model::ModelConfig;
using model::ModelInput;
using numerics::GradMap;
using numerics::ParamStore;
using numerics::Rng;
using numerics::Tape;
using numerics::Tensor;

namespace {

constexpr uint64_t kMaskStream = 0x6d6c6du;     // "mlm"
constexpr uint64_t kShuffleStream = 0x73687566u; // "shuf"

struct SequenceResult {
  GradMap grads;
  double loss_sum = 0.0;  // mean loss times masked count
  int64_t count = 0;
};

}  // namespace

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("train config: lr must be positive");
  if (weight_decay < 0.0 || weight_decay >= 1.0) {
    throw ConfigError("train config: weight_decay must be in [0, 1)");
  }
  if (patience < 1) throw ConfigError("train config: patience must be >= 1");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("train config: max_epochs must be >= 1");
  if (workers < 1) throw ConfigError("train config: workers must be >= 1");
  evaluation::scheme_from_string(val_scheme);
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config: expected a JSON object");
  TrainConfig c;
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.val_scheme = j.value("val_scheme", c.val_scheme);
    c.val_k = j.value("val_k", c.val_k);
    c.checkpoint_f32 = j.value("checkpoint_f32", c.checkpoint_f32);
    c.log_wall_time = j.value("log_wall_time", c.log_wall_time);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"batch_size", batch_size},
                        {"lr", lr},
                        {"weight_decay", weight_decay},
                        {"beta1", beta1},
                        {"beta2", beta2},
                        {"eps", eps},
                        {"max_epochs", max_epochs},
                        {"patience", patience},
                        {"seed", seed},
                        {"workers", workers},
                        {"val_scheme", val_scheme},
                        {"val_k", val_k},
                        {"checkpoint_f32", checkpoint_f32},
                        {"log_wall_time", log_wall_time}};
}

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,train_loss,val_ndcg10,seconds\n";
  char buf[160];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.6f,%.3f\n", static_cast<long long>(e.epoch),
                  e.train_loss, e.val_ndcg10, e.seconds);
    out += buf;
  }
  return out;
}

TrainResult train(const ingest::SplitDataset& dataset, ModelConfig model_config,
                  const TrainConfig& train_config) {
  if (dataset.users.empty()) throw ConfigError("train: dataset has no users");
  train_config.validate();
  if (model_config.vocab_items == 0) model_config.vocab_items = dataset.num_items();
  if (model_config.vocab_items != dataset.num_items()) {
    throw ConfigError("train: model vocab_items does not match dataset item count");
  }
  model_config.validate();

  const int64_t n_users = static_cast<int64_t>(dataset.users.size());
  std::vector<ModelInput> inputs;
  inputs.reserve(static_cast<size_t>(n_users));
  for (const auto& user : dataset.users) {
    ingest::SessionizedHistory history;
    history.user = user.user;
    history.sessions = ingest::sessionize(user.train_events());
    inputs.push_back(model::build_input(history, model_config, model::BuildMode::train));
  }

  ParamStore params = model::init_params(model_config, train_config.seed);
  AdamW optimizer({train_config.lr, train_config.weight_decay, train_config.beta1,
                   train_config.beta2, train_config.eps});

  evaluation::EvalOptions val_options;
  val_options.scheme = evaluation::scheme_from_string(train_config.val_scheme);
  val_options.k = train_config.val_k;
  val_options.seed = train_config.seed;
  val_options.workers = train_config.workers;
  val_options.target_validation = true;

  TrainResult result;
  double best_val = -1.0;
  int64_t non_improving = 0;
  ParamStore best_params = params;

  std::vector<int64_t> order(static_cast<size_t>(n_users));
  for (int64_t i = 0; i < n_users; ++i) order[static_cast<size_t>(i)] = i;

  for (int64_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    auto epoch_start = std::chrono::steady_clock::now();
    {
      Rng shuffle_rng(numerics::mix_seed({train_config.seed, kShuffleStream,
                                          static_cast<uint64_t>(epoch)}));
      shuffle_rng.shuffle(order);
    }

    double epoch_loss_sum = 0.0;
    int64_t epoch_count = 0;

    for (int64_t batch_start = 0; batch_start < n_users;
         batch_start += train_config.batch_size) {
      int64_t batch_end = std::min(n_users, batch_start + train_config.batch_size);
      int64_t batch_n = batch_end - batch_start;

      // Workers only compute per-sequence results; the fold below always runs
      // in sequence order, so the arithmetic is identical for any worker count.
      std::vector<SequenceResult> results(static_cast<size_t>(batch_n));
      auto run_sequence = [&](int64_t b) {
        int64_t u = order[static_cast<size_t>(batch_start + b)];
        const ModelInput& base = inputs[static_cast<size_t>(u)];
        Rng mask_rng(numerics::mix_seed({train_config.seed, kMaskStream,
                                         static_cast<uint64_t>(epoch), static_cast<uint64_t>(u)}));
        MlmExample ex = apply_mlm_mask(base.item_ids, model_config.mask_prob, mask_rng);
        ModelInput masked = base;
        masked.item_ids = ex.masked_ids;

        Tape tape;
        auto logits = model::forward(tape, masked, params, model_config);
        auto loss = tape.cross_entropy_masked(logits, ex.labels, ex.label_mask);
        SequenceResult r;
        r.count = ex.masked_count;
        r.loss_sum = tape.value(loss).at(0) * static_cast<double>(ex.masked_count);
        r.grads = tape.backward(loss);
        results[static_cast<size_t>(b)] = std::move(r);
      };

      if (train_config.workers <= 1) {
        for (int64_t b = 0; b < batch_n; ++b) run_sequence(b);
      } else {
        std::atomic<int64_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (int64_t w = 0; w < train_config.workers; ++w) {
          pool.emplace_back([&]() {
            for (;;) {
              int64_t b = next.fetch_add(1);
              if (b >= batch_n) return;
              try {
                run_sequence(b);
              } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
              }
            }
          });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
      }

      int64_t total_count = 0;
      double batch_loss_sum = 0.0;
      for (const auto& r : results) {
        total_count += r.count;
        batch_loss_sum += r.loss_sum;
      }
      double batch_loss = batch_loss_sum / static_cast<double>(total_count);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train: loss diverged at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(optimizer.steps_taken() + 1));
      }
      // d(batch loss)/dp = sum_s (count_s / total) * d(mean loss_s)/dp.
      GradMap batch_grads;
      for (const auto& [name, t] : params.all()) {
        batch_grads.emplace(name, Tensor::zeros(t.shape));
      }
      for (const auto& r : results) {
        double w = static_cast<double>(r.count) / static_cast<double>(total_count);
        for (auto& [name, acc] : batch_grads) {
          auto it = r.grads.find(name);
          if (it == r.grads.end()) continue;
          const Tensor& g = it->second;
          for (int64_t i = 0; i < acc.numel(); ++i) acc.at(i) += w * g.at(i);
        }
      }
      optimizer.step(params, batch_grads);
      epoch_loss_sum += batch_loss_sum;
      epoch_count += total_count;
    }

    auto val = evaluation::evaluate_model(params, model_config, dataset, val_options);
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss_sum / static_cast<double>(epoch_count);
    entry.val_ndcg10 = val.ndcg;
    if (train_config.log_wall_time) {
      entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                          .count();
    }
    result.log.push_back(entry);

    if (val.ndcg > best_val) {
      best_val = val.ndcg;
      best_params = params;
      result.best_epoch = epoch;
      non_improving = 0;
    } else {
      ++non_improving;
      if (non_improving >= train_config.patience) break;
    }
  }

  result.best_val = best_val;
  result.best.config_json = model_config.to_json().dump();
  result.best.params = std::move(best_params);
  result.best.store_f32 = train_config.checkpoint_f32;
  return result;
}

}  // namespace sabrec::training
