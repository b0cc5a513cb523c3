#include "numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/errors.hpp"

namespace sabrec::numerics {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

}  // namespace

Value Tape::push(Node node, const char* op_name) {
  node.val().check_finite(op_name);
  nodes_.push_back(std::move(node));
  return Value{static_cast<int32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::val(Value v) const {
  if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size()) {
    throw Error("tape: invalid value handle");
  }
  return nodes_[static_cast<size_t>(v.id)].val();
}

const Tensor& Tape::value(Value v) const { return val(v); }

Value Tape::constant(Tensor t) {
  Node n;
  n.owned = std::move(t);
  return push(std::move(n), "constant");
}

Value Tape::param(const std::string& name, const Tensor& t) {
  Node n;
  n.ref = &t;
  n.param_name = name;
  return push(std::move(n), "param");
}

Value Tape::add(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.same_shape(tb),
          "add: shape mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
  Node n;
  n.owned = Tensor::zeros(ta.shape);
  for (int64_t i = 0; i < ta.numel(); ++i) n.owned.at(i) = ta.at(i) + tb.at(i);
  n.parents = {a.id, b.id};
  n.back = [](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(t.nodes_[self].parents[0]);
    Tensor& gb = t.grad(t.nodes_[self].parents[1]);
    for (int64_t i = 0; i < g.numel(); ++i) {
      ga.at(i) += g.at(i);
      gb.at(i) += g.at(i);
    }
  };
  return push(std::move(n), "add");
}

Value Tape::add_rowwise(Value x, Value bias) {
  const Tensor& tx = val(x);
  const Tensor& tb = val(bias);
  require(tx.rank() == 2 && tb.rank() == 1 && tx.extent(1) == tb.extent(0),
          "add_rowwise: shape mismatch " + shape_str(tx.shape) + " vs " + shape_str(tb.shape));
  Node n;
  n.owned = Tensor::zeros(tx.shape);
  int64_t rows = tx.extent(0), cols = tx.extent(1);
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) n.owned.at(i, j) = tx.at(i, j) + tb.at(j);
  n.parents = {x.id, bias.id};
  n.back = [rows, cols](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(t.nodes_[self].parents[0]);
    Tensor& gb = t.grad(t.nodes_[self].parents[1]);
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < cols; ++j) {
        gx.at(i, j) += g.at(i, j);
        gb.at(j) += g.at(i, j);
      }
  };
  return push(std::move(n), "add_rowwise");
}

Value Tape::mul(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.same_shape(tb),
          "mul: shape mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
  Node n;
  n.owned = Tensor::zeros(ta.shape);
  for (int64_t i = 0; i < ta.numel(); ++i) n.owned.at(i) = ta.at(i) * tb.at(i);
  n.parents = {a.id, b.id};
  n.back = [](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& va = t.nodes_[t.nodes_[self].parents[0]].val();
    const Tensor& vb = t.nodes_[t.nodes_[self].parents[1]].val();
    Tensor& ga = t.grad(t.nodes_[self].parents[0]);
    Tensor& gb = t.grad(t.nodes_[self].parents[1]);
    for (int64_t i = 0; i < g.numel(); ++i) {
      ga.at(i) += g.at(i) * vb.at(i);
      gb.at(i) += g.at(i) * va.at(i);
    }
  };
  return push(std::move(n), "mul");
}

Value Tape::scale(Value a, double s) {
  const Tensor& ta = val(a);
  Node n;
  n.owned = Tensor::zeros(ta.shape);
  for (int64_t i = 0; i < ta.numel(); ++i) n.owned.at(i) = ta.at(i) * s;
  n.parents = {a.id};
  n.back = [s](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(t.nodes_[self].parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) ga.at(i) += g.at(i) * s;
  };
  return push(std::move(n), "scale");
}

Value Tape::matmul(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.rank() == 2 && tb.rank() == 2 && ta.extent(1) == tb.extent(0),
          "matmul: shape mismatch " + shape_str(ta.shape) + " x " + shape_str(tb.shape));
  int64_t n_ = ta.extent(0), m = ta.extent(1), k = tb.extent(1);
  Node n;
  n.owned = Tensor::zeros({n_, k});
  {
    const double* pa = ta.data.data();
    const double* pb = tb.data.data();
    double* pc = n.owned.data.data();
    for (int64_t i = 0; i < n_; ++i)
      for (int64_t l = 0; l < m; ++l) {
        double av = pa[i * m + l];
        const double* brow = pb + l * k;
        double* crow = pc + i * k;
        for (int64_t j = 0; j < k; ++j) crow[j] += av * brow[j];
      }
  }
  n.parents = {a.id, b.id};
  n.back = [n_, m, k](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& va = t.nodes_[t.nodes_[self].parents[0]].val();
    const Tensor& vb = t.nodes_[t.nodes_[self].parents[1]].val();
    Tensor& ga = t.grad(t.nodes_[self].parents[0]);
    Tensor& gb = t.grad(t.nodes_[self].parents[1]);
    // dA = g . B^T
    for (int64_t i = 0; i < n_; ++i)
      for (int64_t l = 0; l < m; ++l) {
        double acc = 0.0;
        const double* grow = g.data.data() + i * k;
        const double* brow = vb.data.data() + l * k;
        for (int64_t j = 0; j < k; ++j) acc += grow[j] * brow[j];
        ga.at(i, l) += acc;
      }
    // dB = A^T . g
    for (int64_t l = 0; l < m; ++l)
      for (int64_t i = 0; i < n_; ++i) {
        double av = va.at(i, l);
        const double* grow = g.data.data() + i * k;
        double* brow = gb.data.data() + l * k;
        for (int64_t j = 0; j < k; ++j) brow[j] += av * grow[j];
      }
  };
  return push(std::move(n), "matmul");
}

Value Tape::matmul_nt(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.rank() == 2 && tb.rank() == 2 && ta.extent(1) == tb.extent(1),
          "matmul_nt: shape mismatch " + shape_str(ta.shape) + " x " + shape_str(tb.shape) + "^T");
  int64_t n_ = ta.extent(0), m = ta.extent(1), k = tb.extent(0);
  Node n;
  n.owned = Tensor::zeros({n_, k});
  for (int64_t i = 0; i < n_; ++i) {
    const double* arow = ta.data.data() + i * m;
    double* crow = n.owned.data.data() + i * k;
    for (int64_t j = 0; j < k; ++j) {
      const double* brow = tb.data.data() + j * m;
      double acc = 0.0;
      for (int64_t l = 0; l < m; ++l) acc += arow[l] * brow[l];
      crow[j] = acc;
    }
  }
  n.parents = {a.id, b.id};
  n.back = [n_, m, k](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& va = t.nodes_[t.nodes_[self].parents[0]].val();
    const Tensor& vb = t.nodes_[t.nodes_[self].parents[1]].val();
    Tensor& ga = t.grad(t.nodes_[self].parents[0]);
    Tensor& gb = t.grad(t.nodes_[self].parents[1]);
    // dA = g . B ; dB = g^T . A
    for (int64_t i = 0; i < n_; ++i)
      for (int64_t j = 0; j < k; ++j) {
        double gv = g.at(i, j);
        if (gv == 0.0) continue;
        const double* brow = vb.data.data() + j * m;
        const double* arow = va.data.data() + i * m;
        double* garow = ga.data.data() + i * m;
        double* gbrow = gb.data.data() + j * m;
        for (int64_t l = 0; l < m; ++l) {
          garow[l] += gv * brow[l];
          gbrow[l] += gv * arow[l];
        }
      }
  };
  return push(std::move(n), "matmul_nt");
}

Value Tape::slice_cols(Value x, int64_t offset, int64_t count) {
  const Tensor& tx = val(x);
  require(tx.rank() == 2 && offset >= 0 && count >= 0 && offset + count <= tx.extent(1),
          "slice_cols: invalid range [" + std::to_string(offset) + ", " +
              std::to_string(offset + count) + ") for " + shape_str(tx.shape));
  int64_t rows = tx.extent(0), cols = tx.extent(1);
  Node n;
  n.owned = Tensor::zeros({rows, count});
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < count; ++j) n.owned.at(i, j) = tx.at(i, offset + j);
  n.parents = {x.id};
  n.back = [rows, cols, offset, count](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(t.nodes_[self].parents[0]);
    (void)cols;
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < count; ++j) gx.at(i, offset + j) += g.at(i, j);
  };
  return push(std::move(n), "slice_cols");
}

Value Tape::slice_rows(Value x, int64_t offset, int64_t count) {
  const Tensor& tx = val(x);
  require(tx.rank() == 2 && offset >= 0 && count >= 0 && offset + count <= tx.extent(0),
          "slice_rows: invalid range [" + std::to_string(offset) + ", " +
              std::to_string(offset + count) + ") for " + shape_str(tx.shape));
  int64_t cols = tx.extent(1);
  Node n;
  n.owned = Tensor::zeros({count, cols});
  for (int64_t i = 0; i < count; ++i)
    for (int64_t j = 0; j < cols; ++j) n.owned.at(i, j) = tx.at(offset + i, j);
  n.parents = {x.id};
  n.back = [offset, count, cols](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(t.nodes_[self].parents[0]);
    for (int64_t i = 0; i < count; ++i)
      for (int64_t j = 0; j < cols; ++j) gx.at(offset + i, j) += g.at(i, j);
  };
  return push(std::move(n), "slice_rows");
}

Value Tape::concat_last_dim(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.rank() == 2 && tb.rank() == 2 && ta.extent(0) == tb.extent(0),
          "concat_last_dim: shape mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
  int64_t rows = ta.extent(0), ca = ta.extent(1), cb = tb.extent(1);
  Node n;
  n.owned = Tensor::zeros({rows, ca + cb});
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < ca; ++j) n.owned.at(i, j) = ta.at(i, j);
    for (int64_t j = 0; j < cb; ++j) n.owned.at(i, ca + j) = tb.at(i, j);
  }
  n.parents = {a.id, b.id};
  n.back = [rows, ca, cb](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(t.nodes_[self].parents[0]);
    Tensor& gb = t.grad(t.nodes_[self].parents[1]);
    for (int64_t i = 0; i < rows; ++i) {
      for (int64_t j = 0; j < ca; ++j) ga.at(i, j) += g.at(i, j);
      for (int64_t j = 0; j < cb; ++j) gb.at(i, j) += g.at(i, ca + j);
    }
  };
  return push(std::move(n), "concat_last_dim");
}

Value Tape::gelu(Value x) {
  const Tensor& tx = val(x);
  Node n;
  n.owned = Tensor::zeros(tx.shape);
  for (int64_t i = 0; i < tx.numel(); ++i) {
    double v = tx.at(i);
    n.owned.at(i) = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  n.parents = {x.id};
  n.back = [](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& vx = t.nodes_[t.nodes_[self].parents[0]].val();
    Tensor& gx = t.grad(t.nodes_[self].parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) {
      double v = vx.at(i);
      double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx.at(i) += g.at(i) * (cdf + v * pdf);
    }
  };
  return push(std::move(n), "gelu");
}

Value Tape::cosine(Value x) {
  const Tensor& tx = val(x);
  Node n;
  n.owned = Tensor::zeros(tx.shape);
  for (int64_t i = 0; i < tx.numel(); ++i) n.owned.at(i) = std::cos(tx.at(i));
  n.parents = {x.id};
  n.back = [](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& vx = t.nodes_[t.nodes_[self].parents[0]].val();
    Tensor& gx = t.grad(t.nodes_[self].parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) gx.at(i) += -std::sin(vx.at(i)) * g.at(i);
  };
  return push(std::move(n), "cosine");
}

Value Tape::layer_norm(Value x, Value gain, Value bias, double eps) {
  const Tensor& tx = val(x);
  const Tensor& tg = val(gain);
  const Tensor& tb = val(bias);
  require(tx.rank() == 2, "layer_norm: input must be rank 2, got " + shape_str(tx.shape));
  int64_t rows = tx.extent(0), cols = tx.extent(1);
  require(tg.rank() == 1 && tg.extent(0) == cols && tb.rank() == 1 && tb.extent(0) == cols,
          "layer_norm: gain/bias " + shape_str(tg.shape) + "/" + shape_str(tb.shape) +
              " do not match input " + shape_str(tx.shape));
  Node n;
  n.owned = Tensor::zeros(tx.shape);
  for (int64_t i = 0; i < rows; ++i) {
    double mean = 0.0;
    for (int64_t j = 0; j < cols; ++j) mean += tx.at(i, j);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      double d = tx.at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    double inv = 1.0 / std::sqrt(var + eps);
    for (int64_t j = 0; j < cols; ++j) {
      n.owned.at(i, j) = (tx.at(i, j) - mean) * inv * tg.at(j) + tb.at(j);
    }
  }
  n.parents = {x.id, gain.id, bias.id};
  n.back = [rows, cols, eps](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& vx = t.nodes_[t.nodes_[self].parents[0]].val();
    const Tensor& vg = t.nodes_[t.nodes_[self].parents[1]].val();
    Tensor& gx = t.grad(t.nodes_[self].parents[0]);
    Tensor& gg = t.grad(t.nodes_[self].parents[1]);
    Tensor& gb = t.grad(t.nodes_[self].parents[2]);
    double cd = static_cast<double>(cols);
    for (int64_t i = 0; i < rows; ++i) {
      double mean = 0.0;
      for (int64_t j = 0; j < cols; ++j) mean += vx.at(i, j);
      mean /= cd;
      double var = 0.0;
      for (int64_t j = 0; j < cols; ++j) {
        double d = vx.at(i, j) - mean;
        var += d * d;
      }
      var /= cd;
      double inv = 1.0 / std::sqrt(var + eps);
      double mean_u = 0.0, mean_uh = 0.0;
      for (int64_t j = 0; j < cols; ++j) {
        double hat = (vx.at(i, j) - mean) * inv;
        double u = g.at(i, j) * vg.at(j);
        mean_u += u;
        mean_uh += u * hat;
        gg.at(j) += g.at(i, j) * hat;
        gb.at(j) += g.at(i, j);
      }
      mean_u /= cd;
      mean_uh /= cd;
      for (int64_t j = 0; j < cols; ++j) {
        double hat = (vx.at(i, j) - mean) * inv;
        double u = g.at(i, j) * vg.at(j);
        gx.at(i, j) += (u - mean_u - hat * mean_uh) * inv;
      }
    }
  };
  return push(std::move(n), "layer_norm");
}

Value Tape::softmax_masked(Value logits, const Tensor& mask) {
  const Tensor& tl = val(logits);
  require(tl.rank() == 2, "softmax_masked: logits must be rank 2, got " + shape_str(tl.shape));
  int64_t rows = tl.extent(0), cols = tl.extent(1);
  bool row_mask = false;
  if (mask.rank() == 1 && mask.extent(0) == cols) {
    row_mask = true;
  } else if (!(mask.rank() == 2 && mask.extent(0) == rows && mask.extent(1) == cols)) {
    throw ShapeError("softmax_masked: mask " + shape_str(mask.shape) +
                     " not broadcastable to logits " + shape_str(tl.shape));
  }
  auto keep = [&](int64_t i, int64_t j) {
    return (row_mask ? mask.at(j) : mask.at(i, j)) != 0.0;
  };
  Node n;
  n.owned = Tensor::zeros(tl.shape);
  for (int64_t i = 0; i < rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < cols; ++j)
      if (keep(i, j)) mx = std::max(mx, tl.at(i, j));
    if (!std::isfinite(mx)) {
      throw NumericError("softmax_masked: fully masked row " + std::to_string(i));
    }
    double denom = 0.0;
    for (int64_t j = 0; j < cols; ++j)
      if (keep(i, j)) denom += std::exp(tl.at(i, j) - mx);
    for (int64_t j = 0; j < cols; ++j)
      n.owned.at(i, j) = keep(i, j) ? std::exp(tl.at(i, j) - mx) / denom : 0.0;
  }
  n.parents = {logits.id};
  n.back = [rows, cols](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.nodes_[self].val();
    Tensor& gl = t.grad(t.nodes_[self].parents[0]);
    for (int64_t i = 0; i < rows; ++i) {
      double dot = 0.0;
      for (int64_t j = 0; j < cols; ++j) dot += g.at(i, j) * y.at(i, j);
      for (int64_t j = 0; j < cols; ++j) gl.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
    }
  };
  return push(std::move(n), "softmax_masked");
}

Value Tape::embedding_gather(Value table, const std::vector<int64_t>& ids) {
  const Tensor& tt = val(table);
  require(tt.rank() == 2, "embedding_gather: table must be rank 2, got " + shape_str(tt.shape));
  int64_t rows = tt.extent(0), cols = tt.extent(1);
  int64_t n_ids = static_cast<int64_t>(ids.size());
  Node n;
  n.owned = Tensor::zeros({n_ids, cols});
  for (int64_t i = 0; i < n_ids; ++i) {
    int64_t id = ids[static_cast<size_t>(i)];
    if (id < 0) continue;  // zero row
    if (id >= rows) {
      throw ShapeError("embedding_gather: id " + std::to_string(id) +
                       " out of range for table " + shape_str(tt.shape));
    }
    for (int64_t j = 0; j < cols; ++j) n.owned.at(i, j) = tt.at(id, j);
  }
  n.parents = {table.id};
  n.back = [ids, cols](Tape& t, int32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gt = t.grad(t.nodes_[self].parents[0]);
    for (size_t i = 0; i < ids.size(); ++i) {
      int64_t id = ids[i];
      if (id < 0) continue;
      for (int64_t j = 0; j < cols; ++j)
        gt.at(id, j) += g.at(static_cast<int64_t>(i), j);
    }
  };
  return push(std::move(n), "embedding_gather");
}

Value Tape::outer_affine(const std::vector<double>& t, Value w, Value b) {
  const Tensor& tw = val(w);
  const Tensor& tb = val(b);
  require(tw.rank() == 1 && tb.rank() == 1 && tw.extent(0) == tb.extent(0),
          "outer_affine: w/b shape mismatch " + shape_str(tw.shape) + " vs " + shape_str(tb.shape));
  int64_t rows = static_cast<int64_t>(t.size()), cols = tw.extent(0);
  Node n;
  n.owned = Tensor::zeros({rows, cols});
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j)
      n.owned.at(i, j) = t[static_cast<size_t>(i)] * tw.at(j) + tb.at(j);
  n.parents = {w.id, b.id};
  n.back = [t, rows, cols](Tape& tp, int32_t self) {
    const Tensor& g = tp.grad(self);
    Tensor& gw = tp.grad(tp.nodes_[self].parents[0]);
    Tensor& gb = tp.grad(tp.nodes_[self].parents[1]);
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < cols; ++j) {
        gw.at(j) += g.at(i, j) * t[static_cast<size_t>(i)];
        gb.at(j) += g.at(i, j);
      }
  };
  return push(std::move(n), "outer_affine");
}

Value Tape::cross_entropy_masked(Value logits, const std::vector<int64_t>& labels,
                                 const std::vector<uint8_t>& label_mask) {
  const Tensor& tl = val(logits);
  require(tl.rank() == 2, "cross_entropy_masked: logits must be rank 2, got " + shape_str(tl.shape));
  int64_t rows = tl.extent(0), cols = tl.extent(1);
  require(static_cast<int64_t>(labels.size()) == rows &&
              static_cast<int64_t>(label_mask.size()) == rows,
          "cross_entropy_masked: labels/mask length does not match logit rows");
  int64_t count = 0;
  double loss = 0.0;
  for (int64_t i = 0; i < rows; ++i) {
    if (!label_mask[static_cast<size_t>(i)]) continue;
    int64_t label = labels[static_cast<size_t>(i)];
    if (label < 0 || label >= cols) {
      throw ShapeError("cross_entropy_masked: label " + std::to_string(label) +
                       " out of range at row " + std::to_string(i));
    }
    double mx = tl.at(i, 0);
    for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, tl.at(i, j));
    double denom = 0.0;
    for (int64_t j = 0; j < cols; ++j) denom += std::exp(tl.at(i, j) - mx);
    loss += std::log(denom) - (tl.at(i, label) - mx);
    ++count;
  }
  if (count == 0) {
    throw NumericError("cross_entropy_masked: no positions selected by label mask");
  }
  Node n;
  n.owned = Tensor::scalar(loss / static_cast<double>(count));
  n.parents = {logits.id};
  n.back = [labels, label_mask, rows, cols, count](Tape& t, int32_t self) {
    double gs = t.grad(self).at(0) / static_cast<double>(count);
    const Tensor& vl = t.nodes_[t.nodes_[self].parents[0]].val();
    Tensor& gl = t.grad(t.nodes_[self].parents[0]);
    for (int64_t i = 0; i < rows; ++i) {
      if (!label_mask[static_cast<size_t>(i)]) continue;
      double mx = vl.at(i, 0);
      for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, vl.at(i, j));
      double denom = 0.0;
      for (int64_t j = 0; j < cols; ++j) denom += std::exp(vl.at(i, j) - mx);
      for (int64_t j = 0; j < cols; ++j) {
        double p = std::exp(vl.at(i, j) - mx) / denom;
        double target = (j == labels[static_cast<size_t>(i)]) ? 1.0 : 0.0;
        gl.at(i, j) += gs * (p - target);
      }
    }
  };
  return push(std::move(n), "cross_entropy_masked");
}

Value Tape::sum_all(Value x) {
  const Tensor& tx = val(x);
  double s = 0.0;
  for (double v : tx.data) s += v;
  Node n;
  n.owned = Tensor::scalar(s);
  n.parents = {x.id};
  n.back = [](Tape& t, int32_t self) {
    double gs = t.grad(self).at(0);
    Tensor& gx = t.grad(t.nodes_[self].parents[0]);
    for (int64_t i = 0; i < gx.numel(); ++i) gx.at(i) += gs;
  };
  return push(std::move(n), "sum_all");
}

GradMap Tape::backward(Value loss, const ParamStore* fill_zeros_for) {
  if (backward_done_) throw Error("tape: backward called twice on one recording");
  backward_done_ = true;
  const Tensor& tl = val(loss);
  if (tl.numel() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape_str(tl.shape));
  }
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.push_back(Tensor::zeros(n.val().shape));
  grads_[static_cast<size_t>(loss.id)].at(0) = 1.0;
  for (int32_t id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.back) n.back(*this, id);
  }
  GradMap out;
  for (size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.param_name.empty()) continue;
    auto it = out.find(n.param_name);
    if (it == out.end()) {
      out.emplace(n.param_name, grads_[id]);
    } else {
      // Same parameter registered more than once: accumulate.
      Tensor& acc = it->second;
      for (int64_t i = 0; i < acc.numel(); ++i) acc.at(i) += grads_[id].at(i);
    }
  }
  if (fill_zeros_for) {
    for (const auto& [name, t] : fill_zeros_for->all()) {
      if (!out.count(name)) out.emplace(name, Tensor::zeros(t.shape));
    }
  }
  for (const auto& [name, g] : out) g.check_finite("backward(" + name + ")");
  grads_.clear();
  return out;
}

}  // namespace sabrec::numerics
