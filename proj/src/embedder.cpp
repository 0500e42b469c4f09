#include "srx/embedder.hpp"

#include "srx/common.hpp"

namespace srx {

void init_embedding_table(ParameterStore& store, int vocab_size, int d_embed, Rng& rng) {
  store.create(kEmbeddingParam, gaussian_tensor({vocab_size, d_embed}, 0.25, rng));
}

TRef embed(Tape& tape, ParameterStore& store, const std::vector<int>& token_ids) {
  Param& table = store.at(kEmbeddingParam);
  std::vector<int64_t> rows;
  rows.reserve(token_ids.size());
  for (int id : token_ids) {
    if (id < 0 || id >= table.value.rows()) {
      throw DataError("embed: token index " + std::to_string(id) + " out of range");
    }
    rows.push_back(id);
  }
  return tape.gather_rows(tape.param(table), std::move(rows));
}

}  // namespace srx
