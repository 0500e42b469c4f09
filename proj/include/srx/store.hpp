#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "srx/tensor.hpp"

namespace srx {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value, accumulated by Tape::backward
  bool trainable = true;
};

// Named dense tensors with gradient accumulators. Iteration order is
// insertion order everywhere (updates, clipping, audits, checkpoints) so
// that runs are reproducible.
class ParameterStore {
 public:
  Param& create(const std::string& name, Tensor init, bool trainable = true);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  size_t size() const { return items_.size(); }
  Param& item(size_t i) { return *items_[i]; }
  const Param& item(size_t i) const { return *items_[i]; }

  void zero_grads();
  int64_t scalar_count(bool trainable_only = true) const;

  // Value snapshot keyed by name, for best-checkpoint retention.
  std::vector<std::pair<std::string, Tensor>> snapshot_values() const;
  void restore_values(const std::vector<std::pair<std::string, Tensor>>& snap);

  // Versioned binary map name -> shape -> values; round-trip is value-exact.
  void save(const std::string& path) const;
  static ParameterStore load(const std::string& path);

 private:
  std::vector<std::unique_ptr<Param>> items_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace srx
