#pragma once

#include <vector>

#include "srx/optim.hpp"
#include "srx/store.hpp"
#include "srx/tape.hpp"
#include "srx/vocab.hpp"

namespace srx {

// Trainable token-embedding lookup standing in for a pretrained embedder.
// Marker tokens are trained like ordinary rows.

inline constexpr const char* kEmbeddingParam = "embed.table";

void init_embedding_table(ParameterStore& store, int vocab_size, int d_embed, Rng& rng);

// (n, d_embed) lookup; rows participate in the gradient tape.
TRef embed(Tape& tape, ParameterStore& store, const std::vector<int>& token_ids);

}  // namespace srx
