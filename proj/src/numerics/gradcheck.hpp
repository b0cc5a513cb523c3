#pragma once

#include <functional>

#include "numerics/param_store.hpp"
#include "numerics/rng.hpp"
#include "numerics/tape.hpp"

namespace sabrec::numerics {

// Builds a scalar loss on the given tape from the given parameters. Must be
// deterministic: calling it twice with identical parameters must produce the
// same value.
using LossBuilder = std::function<Value(Tape&, const ParamStore&)>;

// Central-difference gradient check. Compares backward's gradients against
// (f(p+eps) - f(p-eps)) / (2 eps) on `sample_count` randomly sampled
// coordinates and returns the worst relative error, with denominator
// max(|analytic|, |numeric|, 1e-8). Returns 0 for a parameter-free loss.
double finite_difference_check(const LossBuilder& loss, ParamStore& params, double eps,
                               int64_t sample_count, Rng& rng);

}  // namespace sabrec::numerics
