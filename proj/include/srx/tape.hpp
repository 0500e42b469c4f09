#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "srx/store.hpp"
#include "srx/tensor.hpp"

namespace srx {

// Handle to a value recorded on a Tape.
struct TRef {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

enum class Op {
  Constant,
  Param,
  MatMul,
  Add,       // same shape, or (m,n) + (n) row broadcast
  Sub,
  Mul,
  Sigmoid,
  Tanh,
  ConcatCols,
  SliceCols,
  SliceRows,
  StackRows,       // vertical concat of blocks with equal column count
  RepeatRowsEach,  // row i -> rows i*t .. i*t+t-1
  TileRows,        // whole block repeated t times
  Reshape,
  GatherRows,
  SumAll,
  Scale,
  BceSum,  // weighted binary cross entropy, summed to a scalar
};

const char* op_name(Op op);

// Record of primitive operations over tensors. Forward methods append a
// node and return a handle; backward() replays the record in reverse,
// accumulating exactly one gradient contribution per use of each input.
// Every op validates shapes and checks outputs for NaN/Inf.
class Tape {
 public:
  TRef constant(Tensor value);
  TRef param(Param& p);

  TRef matmul(TRef a, TRef b);
  TRef add(TRef a, TRef b);
  TRef sub(TRef a, TRef b);
  TRef mul(TRef a, TRef b);
  TRef sigmoid(TRef a);
  TRef tanh(TRef a);
  TRef concat_cols(std::span<const TRef> parts);
  TRef slice_cols(TRef a, int64_t lo, int64_t hi);
  TRef slice_rows(TRef a, int64_t lo, int64_t hi);
  TRef stack_rows(std::span<const TRef> parts);
  TRef repeat_rows_each(TRef a, int64_t times);
  TRef tile_rows(TRef a, int64_t times);
  TRef reshape(TRef a, std::vector<int64_t> shape);
  TRef gather_rows(TRef a, std::vector<int64_t> indices);
  TRef sum_all(TRef a);
  TRef scale(TRef a, double factor);

  // sum_i weights[i] * BCE(targets[i], clamp(probs[i])); targets and weights
  // are plain data (not differentiated) with the same shape as probs.
  // Probabilities are clamped to [1e-9, 1 - 1e-9] inside the log terms.
  TRef bce_sum(TRef probs, Tensor targets, Tensor weights);

  const Tensor& value(TRef r) const;
  double scalar_value(TRef r) const;

  // Accumulates d(loss)/d(param) into every parameter leaf recorded on this
  // tape. loss must be a scalar. Parameters not on the tape are untouched
  // (their accumulators keep whatever they held, zeros after zero_grads).
  void backward(TRef loss);

  // Gradient of an intermediate node from the last backward() call.
  const Tensor& grad(TRef r) const;

  size_t node_count() const { return nodes_.size(); }
  void reset();

 private:
  struct Node {
    Op op;
    Tensor value;
    std::vector<int> inputs;
    int64_t a0 = 0, a1 = 0;     // slice bounds / repeat counts
    double c0 = 0.0;            // scale factor
    std::vector<int64_t> idx;   // gather indices
    Tensor aux0, aux1;          // bce targets / weights
    Param* param = nullptr;
  };

  TRef push(Node node);
  const Tensor& val(TRef r) const;
  void check_ref(TRef r) const;

  // deque keeps value() references stable while the tape grows
  std::deque<Node> nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace srx
