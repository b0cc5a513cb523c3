#pragma once

#include <cstdint>
#include <map>

#include "numerics/param_store.hpp"
#include "numerics/tape.hpp"

namespace sabrec::training {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// AdamW with decoupled weight decay: the decay term scales the weights
// directly instead of flowing through the moment estimates.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  void step(numerics::ParamStore& params, const numerics::GradMap& grads);

  int64_t steps_taken() const { return step_; }

 private:
  AdamWConfig config_;
  int64_t step_ = 0;
  std::map<std::string, numerics::Tensor> m_;
  std::map<std::string, numerics::Tensor> v_;
};

}  // namespace sabrec::training
