#include "numerics/tensor.hpp"

#include <cmath>
#include <sstream>

#include "common/errors.hpp"

namespace sabrec::numerics {

Tensor::Tensor(std::vector<int64_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_numel(shape) != numel()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
}

Tensor Tensor::zeros(std::vector<int64_t> shape) {
  int64_t n = shape_numel(shape);
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(static_cast<size_t>(n), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t.data) v = value;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  int64_t n = static_cast<int64_t>(values.size());
  return Tensor({n}, std::move(values));
}

void Tensor::check_finite(const std::string& context) const {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NumericError(context + ": non-finite value encountered");
    }
  }
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ' ';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e < 0) throw ShapeError("tensor: negative extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

}  // namespace sabrec::numerics
