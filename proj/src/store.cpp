#include "srx/store.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "srx/common.hpp"

namespace srx {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'X', 'P', 'A', 'R', 'M', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint: truncated file");
  return v;
}

}  // namespace

Param& ParameterStore::create(const std::string& name, Tensor init, bool trainable) {
  if (index_.count(name) > 0) throw Error("parameter store: duplicate name '" + name + "'");
  auto p = std::make_unique<Param>();
  p->name = name;
  p->grad = Tensor::zeros(init.shape);
  p->value = std::move(init);
  p->trainable = trainable;
  index_[name] = items_.size();
  items_.push_back(std::move(p));
  return *items_.back();
}

Param& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("parameter store: unknown name '" + name + "'");
  return *items_[it->second];
}

const Param& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("parameter store: unknown name '" + name + "'");
  return *items_[it->second];
}

bool ParameterStore::contains(const std::string& name) const { return index_.count(name) > 0; }

void ParameterStore::zero_grads() {
  for (auto& p : items_) {
    std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
  }
}

int64_t ParameterStore::scalar_count(bool trainable_only) const {
  int64_t n = 0;
  for (const auto& p : items_) {
    if (!trainable_only || p->trainable) n += p->value.numel();
  }
  return n;
}

std::vector<std::pair<std::string, Tensor>> ParameterStore::snapshot_values() const {
  std::vector<std::pair<std::string, Tensor>> snap;
  snap.reserve(items_.size());
  for (const auto& p : items_) snap.emplace_back(p->name, p->value);
  return snap;
}

void ParameterStore::restore_values(const std::vector<std::pair<std::string, Tensor>>& snap) {
  for (const auto& [name, value] : snap) {
    Param& p = at(name);
    if (!p.value.same_shape(value)) {
      throw ShapeError("parameter store: snapshot shape mismatch for '" + name + "'");
    }
    p.value = value;
  }
}

void ParameterStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod<uint64_t>(out, items_.size());
  for (const auto& p : items_) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_pod<uint8_t>(out, p->trainable ? 1 : 0);
    write_pod<uint32_t>(out, static_cast<uint32_t>(p->value.shape.size()));
    for (int64_t d : p->value.shape) write_pod<int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(p->value.data.data()),
              static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
  }
  if (!out) throw DataError("checkpoint: write failed for '" + path + "'");
}

ParameterStore ParameterStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("checkpoint: bad magic/version in '" + path + "'");
  }
  ParameterStore store;
  uint64_t count = read_pod<uint64_t>(in);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = read_pod<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    bool trainable = read_pod<uint8_t>(in) != 0;
    uint32_t ndim = read_pod<uint32_t>(in);
    std::vector<int64_t> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = read_pod<int64_t>(in);
    Tensor value = Tensor::zeros(shape);
    in.read(reinterpret_cast<char*>(value.data.data()),
            static_cast<std::streamsize>(value.data.size() * sizeof(double)));
    if (!in) throw DataError("checkpoint: truncated tensor data in '" + path + "'");
    store.create(name, std::move(value), trainable);
  }
  return store;
}

}  // namespace srx
