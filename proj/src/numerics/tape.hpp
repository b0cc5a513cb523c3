#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "numerics/param_store.hpp"
#include "numerics/tensor.hpp"

namespace sabrec::numerics {

// Handle to a value recorded on a Tape.
struct Value {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

using GradMap = std::map<std::string, Tensor>;

// Reverse-mode tape over a fixed op vocabulary. Every op computes its result
// eagerly, checks it for NaN/Inf, and records a backward closure. Nodes are
// appended in topological order, so backward is a single reverse sweep.
//
// A tape is single-threaded; independent tapes may run concurrently against
// an immutable ParamStore.
class Tape {
 public:
  // Leaf holding a constant (no gradient of interest).
  Value constant(Tensor t);
  // Leaf referencing a named parameter. The referenced tensor must outlive
  // every use of this tape.
  Value param(const std::string& name, const Tensor& t);

  Value add(Value a, Value b);                    // same shape
  Value add_rowwise(Value x, Value bias);         // [n,k] + [k]
  Value mul(Value a, Value b);                    // elementwise
  Value scale(Value a, double s);
  Value matmul(Value a, Value b);                 // [n,m] x [m,k]
  Value matmul_nt(Value a, Value b);              // [n,m] x [k,m]^T -> [n,k]
  Value slice_cols(Value x, int64_t offset, int64_t count);
  Value slice_rows(Value x, int64_t offset, int64_t count);
  Value concat_last_dim(Value a, Value b);
  Value gelu(Value x);
  Value cosine(Value x);
  Value layer_norm(Value x, Value gain, Value bias, double eps = 1e-12);
  // mask: 1 keeps an entry, 0 removes it; shape [n,k] or [k] broadcast.
  Value softmax_masked(Value logits, const Tensor& mask);
  // Rows of `table` selected by `ids`; id < 0 yields a zero row.
  Value embedding_gather(Value table, const std::vector<int64_t>& ids);
  // out[i][j] = t[i] * w[j] + b[j]; t is constant, w and b differentiable.
  Value outer_affine(const std::vector<double>& t, Value w, Value b);
  // Mean negative log-likelihood over positions with label_mask != 0.
  // labels[i] is the class index at selected positions, ignored elsewhere.
  Value cross_entropy_masked(Value logits, const std::vector<int64_t>& labels,
                             const std::vector<uint8_t>& label_mask);
  Value sum_all(Value x);

  const Tensor& value(Value v) const;

  // Accumulates d(loss)/d(param) for every named parameter on the tape.
  // When `fill_zeros_for` is given, parameters of that store that never
  // appeared on the tape get zero gradients. Backward may run only once.
  GradMap backward(Value loss, const ParamStore* fill_zeros_for = nullptr);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;  // set for param leaves
    std::string param_name;
    std::vector<int32_t> parents;
    // Accumulates into grads_[parent] given grads_[self].
    std::function<void(Tape&, int32_t)> back;

    const Tensor& val() const { return ref ? *ref : owned; }
  };

  Value push(Node node, const char* op_name);
  const Tensor& val(Value v) const;
  Tensor& grad(int32_t id) { return grads_[static_cast<size_t>(id)]; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool backward_done_ = false;
};

}  // namespace sabrec::numerics
