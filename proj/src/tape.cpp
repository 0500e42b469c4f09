#include "srx/tape.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "srx/common.hpp"

namespace srx {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EMat>;
using MapConst = Eigen::Map<const EMat>;

constexpr double kProbClamp = 1e-9;

MapConst map2d(const Tensor& t) { return MapConst(t.data.data(), t.rows(), t.cols()); }
MapMat map2d(Tensor& t) { return MapMat(t.data.data(), t.rows(), t.cols()); }

double clamp_prob(double p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string("op ") + op_name(op) + ": incompatible shapes " + a.shape_str() +
                   " and " + b.shape_str());
}

void require_2d(Op op, const Tensor& t) {
  if (t.ndim() != 2) {
    throw ShapeError(std::string("op ") + op_name(op) + ": expected 2-d tensor, got " +
                     t.shape_str());
  }
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::SliceRows: return "slice_rows";
    case Op::StackRows: return "stack_rows";
    case Op::RepeatRowsEach: return "repeat_rows_each";
    case Op::TileRows: return "tile_rows";
    case Op::Reshape: return "reshape";
    case Op::GatherRows: return "gather_rows";
    case Op::SumAll: return "sum_all";
    case Op::Scale: return "scale";
    case Op::BceSum: return "bce_sum";
  }
  return "?";
}

void Tape::check_ref(TRef r) const {
  if (!r.valid() || r.idx >= static_cast<int>(nodes_.size())) {
    throw Error("tape: invalid node reference");
  }
}

const Tensor& Tape::val(TRef r) const {
  check_ref(r);
  return nodes_[static_cast<size_t>(r.idx)].value;
}

const Tensor& Tape::value(TRef r) const { return val(r); }

double Tape::scalar_value(TRef r) const {
  const Tensor& t = val(r);
  if (t.numel() != 1) throw ShapeError("tape: scalar_value on shape " + t.shape_str());
  return t.data[0];
}

TRef Tape::push(Node node) {
  if (!node.value.all_finite()) {
    throw NumericError(std::string("op ") + op_name(node.op) + ": non-finite output");
  }
  nodes_.push_back(std::move(node));
  return TRef{static_cast<int>(nodes_.size()) - 1};
}

void Tape::reset() {
  nodes_.clear();
  grads_.clear();
}

TRef Tape::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

TRef Tape::param(Param& p) {
  Node n;
  n.op = Op::Param;
  n.value = p.value;
  n.param = &p;
  return push(std::move(n));
}

TRef Tape::matmul(TRef a, TRef b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require_2d(Op::MatMul, ta);
  require_2d(Op::MatMul, tb);
  if (ta.cols() != tb.rows()) shape_fail(Op::MatMul, ta, tb);
  Node n;
  n.op = Op::MatMul;
  n.inputs = {a.idx, b.idx};
  n.value = Tensor::zeros({ta.rows(), tb.cols()});
  if (ta.rows() > 0 && tb.cols() > 0) {
    map2d(n.value).noalias() = map2d(ta) * map2d(tb);
  }
  return push(std::move(n));
}

TRef Tape::add(TRef a, TRef b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  Node n;
  n.op = Op::Add;
  n.inputs = {a.idx, b.idx};
  if (ta.same_shape(tb)) {
    n.value = ta;
    for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += tb.data[i];
  } else if (ta.ndim() == 2 && tb.ndim() == 1 && ta.cols() == tb.shape[0]) {
    // (m, n) + (n): the one broadcast the architecture needs.
    n.value = ta;
    int64_t m = ta.rows(), c = ta.cols();
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t j = 0; j < c; ++j) n.value.data[static_cast<size_t>(i * c + j)] += tb.data[static_cast<size_t>(j)];
    }
    n.a0 = 1;  // marks broadcast form for backward
  } else {
    shape_fail(Op::Add, ta, tb);
  }
  return push(std::move(n));
}

TRef Tape::sub(TRef a, TRef b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) shape_fail(Op::Sub, ta, tb);
  Node n;
  n.op = Op::Sub;
  n.inputs = {a.idx, b.idx};
  n.value = ta;
  for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] -= tb.data[i];
  return push(std::move(n));
}

TRef Tape::mul(TRef a, TRef b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) shape_fail(Op::Mul, ta, tb);
  Node n;
  n.op = Op::Mul;
  n.inputs = {a.idx, b.idx};
  n.value = ta;
  for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= tb.data[i];
  return push(std::move(n));
}

TRef Tape::sigmoid(TRef a) {
  Node n;
  n.op = Op::Sigmoid;
  n.inputs = {a.idx};
  n.value = val(a);
  for (double& x : n.value.data) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(n));
}

TRef Tape::tanh(TRef a) {
  Node n;
  n.op = Op::Tanh;
  n.inputs = {a.idx};
  n.value = val(a);
  for (double& x : n.value.data) x = std::tanh(x);
  return push(std::move(n));
}

TRef Tape::concat_cols(std::span<const TRef> parts) {
  if (parts.empty()) throw ShapeError("op concat_cols: no inputs");
  int64_t rows = val(parts[0]).rows();
  int64_t total = 0;
  for (TRef r : parts) {
    const Tensor& t = val(r);
    require_2d(Op::ConcatCols, t);
    if (t.rows() != rows) shape_fail(Op::ConcatCols, val(parts[0]), t);
    total += t.cols();
  }
  Node n;
  n.op = Op::ConcatCols;
  n.value = Tensor::zeros({rows, total});
  int64_t offset = 0;
  for (TRef r : parts) {
    n.inputs.push_back(r.idx);
    const Tensor& t = val(r);
    int64_t c = t.cols();
    for (int64_t i = 0; i < rows; ++i) {
      std::copy_n(t.data.begin() + i * c, c, n.value.data.begin() + i * total + offset);
    }
    offset += c;
  }
  return push(std::move(n));
}

TRef Tape::slice_cols(TRef a, int64_t lo, int64_t hi) {
  const Tensor& ta = val(a);
  require_2d(Op::SliceCols, ta);
  if (lo < 0 || hi > ta.cols() || lo > hi) {
    throw ShapeError("op slice_cols: range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     ") out of bounds for " + ta.shape_str());
  }
  Node n;
  n.op = Op::SliceCols;
  n.inputs = {a.idx};
  n.a0 = lo;
  n.a1 = hi;
  int64_t m = ta.rows(), c = ta.cols(), w = hi - lo;
  n.value = Tensor::zeros({m, w});
  for (int64_t i = 0; i < m; ++i) {
    std::copy_n(ta.data.begin() + i * c + lo, w, n.value.data.begin() + i * w);
  }
  return push(std::move(n));
}

TRef Tape::slice_rows(TRef a, int64_t lo, int64_t hi) {
  const Tensor& ta = val(a);
  require_2d(Op::SliceRows, ta);
  if (lo < 0 || hi > ta.rows() || lo > hi) {
    throw ShapeError("op slice_rows: range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     ") out of bounds for " + ta.shape_str());
  }
  Node n;
  n.op = Op::SliceRows;
  n.inputs = {a.idx};
  n.a0 = lo;
  n.a1 = hi;
  int64_t c = ta.cols();
  n.value = Tensor::zeros({hi - lo, c});
  std::copy_n(ta.data.begin() + lo * c, (hi - lo) * c, n.value.data.begin());
  return push(std::move(n));
}

TRef Tape::stack_rows(std::span<const TRef> parts) {
  if (parts.empty()) throw ShapeError("op stack_rows: no inputs");
  int64_t cols = val(parts[0]).cols();
  int64_t rows = 0;
  for (TRef r : parts) {
    const Tensor& t = val(r);
    require_2d(Op::StackRows, t);
    if (t.cols() != cols) shape_fail(Op::StackRows, val(parts[0]), t);
    rows += t.rows();
  }
  Node n;
  n.op = Op::StackRows;
  n.value = Tensor::zeros({rows, cols});
  int64_t offset = 0;
  for (TRef r : parts) {
    n.inputs.push_back(r.idx);
    const Tensor& t = val(r);
    std::copy(t.data.begin(), t.data.end(), n.value.data.begin() + offset);
    offset += t.numel();
  }
  return push(std::move(n));
}

TRef Tape::repeat_rows_each(TRef a, int64_t times) {
  const Tensor& ta = val(a);
  require_2d(Op::RepeatRowsEach, ta);
  if (times < 0) throw ShapeError("op repeat_rows_each: negative count");
  Node n;
  n.op = Op::RepeatRowsEach;
  n.inputs = {a.idx};
  n.a0 = times;
  int64_t m = ta.rows(), c = ta.cols();
  n.value = Tensor::zeros({m * times, c});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t t = 0; t < times; ++t) {
      std::copy_n(ta.data.begin() + i * c, c, n.value.data.begin() + (i * times + t) * c);
    }
  }
  return push(std::move(n));
}

TRef Tape::tile_rows(TRef a, int64_t times) {
  const Tensor& ta = val(a);
  require_2d(Op::TileRows, ta);
  if (times < 0) throw ShapeError("op tile_rows: negative count");
  Node n;
  n.op = Op::TileRows;
  n.inputs = {a.idx};
  n.a0 = times;
  int64_t m = ta.rows(), c = ta.cols();
  n.value = Tensor::zeros({m * times, c});
  for (int64_t t = 0; t < times; ++t) {
    std::copy(ta.data.begin(), ta.data.end(), n.value.data.begin() + t * m * c);
  }
  return push(std::move(n));
}

TRef Tape::reshape(TRef a, std::vector<int64_t> shape) {
  const Tensor& ta = val(a);
  Tensor probe = Tensor::zeros(shape);
  if (probe.numel() != ta.numel()) {
    throw ShapeError("op reshape: cannot reshape " + ta.shape_str() + " to " + shape_str(shape));
  }
  Node n;
  n.op = Op::Reshape;
  n.inputs = {a.idx};
  n.value = Tensor(std::move(shape), ta.data);
  return push(std::move(n));
}

TRef Tape::gather_rows(TRef a, std::vector<int64_t> indices) {
  const Tensor& ta = val(a);
  require_2d(Op::GatherRows, ta);
  int64_t m = ta.rows(), c = ta.cols();
  for (int64_t ix : indices) {
    if (ix < 0 || ix >= m) {
      throw ShapeError("op gather_rows: index " + std::to_string(ix) + " out of range for " +
                       ta.shape_str());
    }
  }
  Node n;
  n.op = Op::GatherRows;
  n.inputs = {a.idx};
  n.value = Tensor::zeros({static_cast<int64_t>(indices.size()), c});
  for (size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(ta.data.begin() + indices[i] * c, c,
                n.value.data.begin() + static_cast<int64_t>(i) * c);
  }
  n.idx = std::move(indices);
  return push(std::move(n));
}

TRef Tape::sum_all(TRef a) {
  const Tensor& ta = val(a);
  double s = 0.0;
  for (double x : ta.data) s += x;
  Node n;
  n.op = Op::SumAll;
  n.inputs = {a.idx};
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

TRef Tape::scale(TRef a, double factor) {
  Node n;
  n.op = Op::Scale;
  n.inputs = {a.idx};
  n.c0 = factor;
  n.value = val(a);
  for (double& x : n.value.data) x *= factor;
  return push(std::move(n));
}

TRef Tape::bce_sum(TRef probs, Tensor targets, Tensor weights) {
  const Tensor& tp = val(probs);
  if (!tp.same_shape(targets) || !tp.same_shape(weights)) {
    throw ShapeError("op bce_sum: probs " + tp.shape_str() + ", targets " + targets.shape_str() +
                     ", weights " + weights.shape_str() + " must have equal shapes");
  }
  double loss = 0.0;
  for (size_t i = 0; i < tp.data.size(); ++i) {
    double p = clamp_prob(tp.data[i]);
    double y = targets.data[i];
    loss -= weights.data[i] * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  Node n;
  n.op = Op::BceSum;
  n.inputs = {probs.idx};
  n.aux0 = std::move(targets);
  n.aux1 = std::move(weights);
  n.value = Tensor::scalar(loss);
  return push(std::move(n));
}

const Tensor& Tape::grad(TRef r) const {
  check_ref(r);
  if (grads_.size() != nodes_.size()) throw Error("tape: backward() has not run");
  return grads_[static_cast<size_t>(r.idx)];
}

void Tape::backward(TRef loss) {
  if (nodes_.empty()) throw Error("tape: backward on empty tape");
  check_ref(loss);
  if (nodes_[static_cast<size_t>(loss.idx)].value.numel() != 1) {
    throw ShapeError("tape: backward requires a scalar loss, got " +
                     nodes_[static_cast<size_t>(loss.idx)].value.shape_str());
  }
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.push_back(Tensor::zeros(n.value.shape));
  grads_[static_cast<size_t>(loss.idx)].data[0] = 1.0;

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    Tensor& g = grads_[static_cast<size_t>(i)];
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::Param:
        for (size_t k = 0; k < g.data.size(); ++k) n.param->grad.data[k] += g.data[k];
        break;
      case Op::MatMul: {
        const Tensor& ta = nodes_[static_cast<size_t>(n.inputs[0])].value;
        const Tensor& tb = nodes_[static_cast<size_t>(n.inputs[1])].value;
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        Tensor& gb = grads_[static_cast<size_t>(n.inputs[1])];
        if (g.rows() > 0 && g.cols() > 0) {
          if (ta.rows() > 0 && ta.cols() > 0) map2d(ga).noalias() += map2d(g) * map2d(tb).transpose();
          if (tb.rows() > 0 && tb.cols() > 0) map2d(gb).noalias() += map2d(ta).transpose() * map2d(g);
        }
        break;
      }
      case Op::Add: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        Tensor& gb = grads_[static_cast<size_t>(n.inputs[1])];
        for (size_t k = 0; k < g.data.size(); ++k) ga.data[k] += g.data[k];
        if (n.a0 == 0) {
          for (size_t k = 0; k < g.data.size(); ++k) gb.data[k] += g.data[k];
        } else {
          int64_t m = g.rows(), c = g.cols();
          for (int64_t r = 0; r < m; ++r) {
            for (int64_t j = 0; j < c; ++j) gb.data[static_cast<size_t>(j)] += g.data[static_cast<size_t>(r * c + j)];
          }
        }
        break;
      }
      case Op::Sub: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        Tensor& gb = grads_[static_cast<size_t>(n.inputs[1])];
        for (size_t k = 0; k < g.data.size(); ++k) {
          ga.data[k] += g.data[k];
          gb.data[k] -= g.data[k];
        }
        break;
      }
      case Op::Mul: {
        const Tensor& ta = nodes_[static_cast<size_t>(n.inputs[0])].value;
        const Tensor& tb = nodes_[static_cast<size_t>(n.inputs[1])].value;
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        Tensor& gb = grads_[static_cast<size_t>(n.inputs[1])];
        for (size_t k = 0; k < g.data.size(); ++k) {
          ga.data[k] += g.data[k] * tb.data[k];
          gb.data[k] += g.data[k] * ta.data[k];
        }
        break;
      }
      case Op::Sigmoid: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        for (size_t k = 0; k < g.data.size(); ++k) {
          double y = n.value.data[k];
          ga.data[k] += g.data[k] * y * (1.0 - y);
        }
        break;
      }
      case Op::Tanh: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        for (size_t k = 0; k < g.data.size(); ++k) {
          double y = n.value.data[k];
          ga.data[k] += g.data[k] * (1.0 - y * y);
        }
        break;
      }
      case Op::ConcatCols: {
        int64_t rows = g.rows(), total = g.cols();
        int64_t offset = 0;
        for (int in : n.inputs) {
          Tensor& gin = grads_[static_cast<size_t>(in)];
          int64_t c = gin.cols();
          for (int64_t r = 0; r < rows; ++r) {
            for (int64_t j = 0; j < c; ++j) {
              gin.data[static_cast<size_t>(r * c + j)] += g.data[static_cast<size_t>(r * total + offset + j)];
            }
          }
          offset += c;
        }
        break;
      }
      case Op::SliceCols: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        int64_t m = g.rows(), w = g.cols(), c = ga.cols();
        for (int64_t r = 0; r < m; ++r) {
          for (int64_t j = 0; j < w; ++j) {
            ga.data[static_cast<size_t>(r * c + n.a0 + j)] += g.data[static_cast<size_t>(r * w + j)];
          }
        }
        break;
      }
      case Op::SliceRows: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        int64_t c = g.cols();
        for (size_t k = 0; k < g.data.size(); ++k) {
          ga.data[static_cast<size_t>(n.a0 * c) + k] += g.data[k];
        }
        break;
      }
      case Op::StackRows: {
        int64_t offset = 0;
        for (int in : n.inputs) {
          Tensor& gin = grads_[static_cast<size_t>(in)];
          for (size_t k = 0; k < gin.data.size(); ++k) {
            gin.data[k] += g.data[static_cast<size_t>(offset) + k];
          }
          offset += gin.numel();
        }
        break;
      }
      case Op::RepeatRowsEach: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        int64_t m = ga.rows(), c = ga.cols(), t = n.a0;
        for (int64_t r = 0; r < m; ++r) {
          for (int64_t rep = 0; rep < t; ++rep) {
            for (int64_t j = 0; j < c; ++j) {
              ga.data[static_cast<size_t>(r * c + j)] += g.data[static_cast<size_t>(((r * t + rep) * c) + j)];
            }
          }
        }
        break;
      }
      case Op::TileRows: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        int64_t block = ga.numel(), t = n.a0;
        for (int64_t rep = 0; rep < t; ++rep) {
          for (int64_t k = 0; k < block; ++k) {
            ga.data[static_cast<size_t>(k)] += g.data[static_cast<size_t>(rep * block + k)];
          }
        }
        break;
      }
      case Op::Reshape: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        for (size_t k = 0; k < g.data.size(); ++k) ga.data[k] += g.data[k];
        break;
      }
      case Op::GatherRows: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        int64_t c = ga.cols();
        for (size_t i = 0; i < n.idx.size(); ++i) {
          for (int64_t j = 0; j < c; ++j) {
            ga.data[static_cast<size_t>(n.idx[i] * c + j)] += g.data[i * static_cast<size_t>(c) + static_cast<size_t>(j)];
          }
        }
        break;
      }
      case Op::SumAll: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        double up = g.data[0];
        for (double& x : ga.data) x += up;
        break;
      }
      case Op::Scale: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        for (size_t k = 0; k < g.data.size(); ++k) ga.data[k] += n.c0 * g.data[k];
        break;
      }
      case Op::BceSum: {
        Tensor& ga = grads_[static_cast<size_t>(n.inputs[0])];
        const Tensor& probs = nodes_[static_cast<size_t>(n.inputs[0])].value;
        double up = g.data[0];
        for (size_t k = 0; k < ga.data.size(); ++k) {
          double p = clamp_prob(probs.data[k]);
          double y = n.aux0.data[k];
          ga.data[k] += up * n.aux1.data[k] * (p - y) / (p * (1.0 - p));
        }
        break;
      }
    }
  }
}

}  // namespace srx
