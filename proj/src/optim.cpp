#include "srx/optim.hpp"

#include <cmath>

#include "srx/common.hpp"

namespace srx {

void AdamOptimizer::step(ParameterStore& store) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < store.size(); ++i) {
    Param& p = store.item(i);
    if (!p.trainable) continue;
    if (!p.grad.all_finite()) {
      throw NumericError("adam: non-finite gradient in '" + p.name + "'");
    }
    auto it = moments_.find(p.name);
    if (it == moments_.end()) {
      it = moments_.emplace(p.name, Moments{Tensor::zeros(p.value.shape), Tensor::zeros(p.value.shape)}).first;
    }
    Moments& mo = it->second;
    for (size_t k = 0; k < p.value.data.size(); ++k) {
      double g = p.grad.data[k];
      mo.m.data[k] = cfg_.beta1 * mo.m.data[k] + (1.0 - cfg_.beta1) * g;
      mo.v.data[k] = cfg_.beta2 * mo.v.data[k] + (1.0 - cfg_.beta2) * g * g;
      double m_hat = mo.m.data[k] / bc1;
      double v_hat = mo.v.data[k] / bc2;
      p.value.data[k] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
    std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
  }
}

double clip_gradients(ParameterStore& store, double max_norm) {
  if (max_norm <= 0.0) throw Error("clip_gradients: max_norm must be positive");
  double sq = 0.0;
  for (size_t i = 0; i < store.size(); ++i) {
    const Param& p = store.item(i);
    if (!p.trainable) continue;
    for (double g : p.grad.data) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (norm <= max_norm) return 1.0;
  double factor = max_norm / norm;
  scale_gradients(store, factor);
  return factor;
}

void scale_gradients(ParameterStore& store, double factor) {
  for (size_t i = 0; i < store.size(); ++i) {
    Param& p = store.item(i);
    if (!p.trainable) continue;
    for (double& g : p.grad.data) g *= factor;
  }
}

FdReport finite_difference_check(const std::function<double()>& f, ParameterStore& store,
                                 double epsilon) {
  if (!(epsilon > 0.0) || epsilon > 1e-2) {
    throw Error("finite_difference_check: epsilon must lie in (0, 1e-2]");
  }
  store.zero_grads();
  (void)f();  // populates analytic gradients

  std::vector<Tensor> analytic;
  analytic.reserve(store.size());
  for (size_t i = 0; i < store.size(); ++i) analytic.push_back(store.item(i).grad);

  FdReport report;
  for (size_t i = 0; i < store.size(); ++i) {
    Param& p = store.item(i);
    if (!p.trainable) continue;
    FdEntry entry;
    entry.name = p.name;
    for (size_t k = 0; k < p.value.data.size(); ++k) {
      double saved = p.value.data[k];
      p.value.data[k] = saved + epsilon;
      double up = f();
      p.value.data[k] = saved - epsilon;
      double down = f();
      p.value.data[k] = saved;
      double numeric = (up - down) / (2.0 * epsilon);
      double a = analytic[i].data[k];
      double diff = std::fabs(a - numeric);
      double rel = diff / std::max({1e-3, std::fabs(a), std::fabs(numeric)});
      if (rel > entry.max_rel_err) entry.max_rel_err = rel;
      if (diff > entry.max_abs_diff) entry.max_abs_diff = diff;
    }
    if (entry.max_rel_err > report.worst_rel_err) {
      report.worst_rel_err = entry.max_rel_err;
      report.worst_name = entry.name;
    }
    report.per_tensor.push_back(std::move(entry));
  }
  store.zero_grads();
  return report;
}

Tensor glorot_uniform(int64_t rows, int64_t cols, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t = Tensor::zeros({rows, cols});
  for (double& x : t.data) x = rng.uniform(-limit, limit);
  return t;
}

Tensor gaussian_tensor(std::vector<int64_t> shape, double stddev, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& x : t.data) x = rng.gaussian(0.0, stddev);
  return t;
}

}  // namespace srx
