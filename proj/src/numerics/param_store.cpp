#include "numerics/param_store.hpp"

#include "common/errors.hpp"

namespace sabrec::numerics {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  auto [it, inserted] = params_.emplace(name, std::move(t));
  if (!inserted) throw ConfigError("param store: duplicate parameter name '" + name + "'");
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("param store: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("param store: unknown parameter '" + name + "'");
  return it->second;
}

int64_t ParamStore::total_parameters() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

}  // namespace sabrec::numerics
