#include "numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "common/errors.hpp"

namespace sabrec::numerics {

namespace {

double eval_loss(const LossBuilder& loss, const ParamStore& params) {
  Tape tape;
  Value v = loss(tape, params);
  const Tensor& t = tape.value(v);
  if (t.numel() != 1) throw ShapeError("finite_difference_check: loss is not scalar");
  return t.at(0);
}

}  // namespace

double finite_difference_check(const LossBuilder& loss, ParamStore& params, double eps,
                               int64_t sample_count, Rng& rng) {
  if (eps <= 0.0) throw ConfigError("finite_difference_check: eps must be positive");

  std::vector<std::pair<const std::string*, int64_t>> coords;
  for (const auto& [name, t] : params.all()) {
    for (int64_t i = 0; i < t.numel(); ++i) coords.emplace_back(&name, i);
  }
  if (coords.empty()) return 0.0;

  GradMap analytic;
  {
    Tape tape;
    Value v = loss(tape, params);
    analytic = tape.backward(v, &params);
  }

  int64_t total = static_cast<int64_t>(coords.size());
  std::vector<int64_t> picks;
  if (sample_count >= total) {
    picks.resize(static_cast<size_t>(total));
    for (int64_t i = 0; i < total; ++i) picks[static_cast<size_t>(i)] = i;
  } else {
    // Partial Fisher-Yates: first sample_count entries of a shuffle.
    std::vector<int64_t> idx(static_cast<size_t>(total));
    for (int64_t i = 0; i < total; ++i) idx[static_cast<size_t>(i)] = i;
    for (int64_t i = 0; i < sample_count; ++i) {
      int64_t j = i + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(total - i)));
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    picks.assign(idx.begin(), idx.begin() + static_cast<long>(sample_count));
  }

  double worst = 0.0;
  for (int64_t pick : picks) {
    const auto& [name, flat] = coords[static_cast<size_t>(pick)];
    Tensor& t = params.at(*name);
    double saved = t.at(flat);
    t.at(flat) = saved + eps;
    double up = eval_loss(loss, params);
    t.at(flat) = saved - eps;
    double down = eval_loss(loss, params);
    t.at(flat) = saved;
    double numeric = (up - down) / (2.0 * eps);
    double exact = analytic.at(*name).at(flat);
    double denom = std::max({std::fabs(exact), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(exact - numeric) / denom);
  }
  return worst;
}

}  // namespace sabrec::numerics
