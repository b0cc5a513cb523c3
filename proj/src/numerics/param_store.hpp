#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "numerics/tensor.hpp"

namespace sabrec::numerics {

// Named trainable tensors. std::map gives deterministic lexicographic
// iteration, which the optimizer and checkpoint writer rely on.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  const std::map<std::string, Tensor>& all() const { return params_; }
  std::map<std::string, Tensor>& all() { return params_; }

  size_t size() const { return params_.size(); }
  int64_t total_parameters() const;

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace sabrec::numerics
