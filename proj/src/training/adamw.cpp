#include "training/adamw.hpp"

#include <cmath>

#include "common/errors.hpp"

namespace sabrec::training {

using numerics::Tensor;

void AdamW::step(numerics::ParamStore& params, const numerics::GradMap& grads) {
  ++step_;
  double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (auto& [name, weights] : params.all()) {
    auto git = grads.find(name);
    if (git == grads.end()) {
      throw ConfigError("adamw: missing gradient for parameter '" + name + "'");
    }
    const Tensor& g = git->second;
    if (!g.same_shape(weights)) {
      throw ShapeError("adamw: gradient shape " + numerics::shape_str(g.shape) +
                       " does not match parameter '" + name + "' " +
                       numerics::shape_str(weights.shape));
    }
    auto mit = m_.find(name);
    if (mit == m_.end()) {
      mit = m_.emplace(name, Tensor::zeros(weights.shape)).first;
      v_.emplace(name, Tensor::zeros(weights.shape));
    }
    Tensor& m = mit->second;
    Tensor& v = v_.at(name);
    for (int64_t i = 0; i < weights.numel(); ++i) {
      double gi = g.at(i);
      m.at(i) = config_.beta1 * m.at(i) + (1.0 - config_.beta1) * gi;
      v.at(i) = config_.beta2 * v.at(i) + (1.0 - config_.beta2) * gi * gi;
      double m_hat = m.at(i) / bc1;
      double v_hat = v.at(i) / bc2;
      weights.at(i) -= config_.lr * (m_hat / (std::sqrt(v_hat) + config_.eps) +
                                     config_.weight_decay * weights.at(i));
    }
  }
}

}  // namespace sabrec::training
