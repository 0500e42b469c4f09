#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "srx/rng.hpp"
#include "srx/store.hpp"

namespace srx {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment accumulators persist across steps and
// live here, keyed by parameter name; gradient accumulators are zeroed
// after each step.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParameterStore& store);
  int64_t steps_taken() const { return t_; }

 private:
  struct Moments {
    Tensor m, v;
  };
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

// Scales all trainable gradients by max_norm / ||g|| when the global L2
// norm exceeds max_norm. Returns the factor applied (1.0 when unchanged).
double clip_gradients(ParameterStore& store, double max_norm);

// Uniformly scale every trainable gradient (used for batch averaging).
void scale_gradients(ParameterStore& store, double factor);

struct FdEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_diff = 0.0;
};

struct FdReport {
  std::vector<FdEntry> per_tensor;
  double worst_rel_err = 0.0;
  std::string worst_name;

  bool passed(double tolerance) const { return worst_rel_err <= tolerance; }
};

// Central-difference audit of analytic gradients. `f` must evaluate the
// scalar objective from the store's current values, run backward so that
// gradient accumulators are populated, and return the loss. It must be
// deterministic. epsilon must lie in (0, 1e-2].
//
// Relative error per scalar is |a - n| / max(1e-3, |a|, |n|); the floor
// keeps roundoff in near-zero gradients from registering as failures
// while leaving any real discrepancy visible in the numerator.
FdReport finite_difference_check(const std::function<double()>& f, ParameterStore& store,
                                 double epsilon = 1e-5);

// Initialization helpers.
Tensor glorot_uniform(int64_t rows, int64_t cols, Rng& rng);
Tensor gaussian_tensor(std::vector<int64_t> shape, double stddev, Rng& rng);

}  // namespace srx
