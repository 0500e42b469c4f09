#pragma once

#include <array>
#include <string>
#include <vector>

#include "srx/optim.hpp"
#include "srx/store.hpp"
#include "srx/tape.hpp"

namespace srx {

// Selection recurrent network: an LSTM-like cell whose selection gates
// split each step's memory into task-specific and task-shared streams.
// The three-task form feeds the entity / subject / object cascade; the
// two-task form is the entity/relation variant.

struct SrnConfig {
  int d_embed = 32;
  int d_hidden = 64;
  // The history-state master gates are computed by the same procedure as
  // the current-state ones; whether they share weights is configurable.
  bool share_master_weights = false;
};

// Stream order used throughout: e, s, o, es, eo, so, eso.
enum StreamIdx { kE = 0, kS = 1, kO = 2, kES = 3, kEO = 4, kSO = 5, kESO = 6 };
using StreamRefs = std::array<TRef, 7>;

struct GateBundle3 {
  TRef rho_e, rho_s, rho_o;        // master gates
  TRef g_es, g_eo, g_so, g_eso;    // shared gates
  TRef g_e, g_s, g_o;              // independent gates
};

struct SrnStep3Out {
  TRef h, c;
  StreamRefs streams;              // tanh of the seven memories
  GateBundle3 gates_new, gates_hist;
};

struct GateBundle2 {
  TRef rho_e, rho_r;
  TRef g_er;
  TRef g_e, g_r;
};

struct SrnStep2Out {
  TRef h, c;
  TRef h_e, h_r, h_er;
  GateBundle2 gates_new, gates_hist;
};

enum class Direction { Forward, Backward, Bidirectional };

// Parameter layout under `prefix`: W1/b1 (forget, output, candidate),
// W2/b2 (masters for the current state), W3/b3 (masters for the filtered
// history state; absent when shared), Wlin/blin (memory combiner).
void init_srn3(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg, Rng& rng);
void init_srn2(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg, Rng& rng);
// Two directional parameter sets under prefix + "fwd." / "bwd.".
void init_srn3_bi(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg, Rng& rng);
void init_bilstm(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg, Rng& rng);

SrnStep3Out srn_step3(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const SrnConfig& cfg, TRef h_prev, TRef c_prev, TRef x_t);
SrnStep2Out srn_step2(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const SrnConfig& cfg, TRef h_prev, TRef c_prev, TRef x_t);

// Threads the recurrence over an (n, d_embed) embedding block and collects
// the stream refs per token. Bidirectional expects parameters from
// init_srn3_bi and concatenates the two directions per stream.
std::vector<StreamRefs> encode_srn3(Tape& tape, ParameterStore& store, const std::string& prefix,
                                    const SrnConfig& cfg, TRef embeddings, Direction direction);

std::vector<SrnStep2Out> encode_srn2_forward(Tape& tape, ParameterStore& store,
                                             const std::string& prefix, const SrnConfig& cfg,
                                             TRef embeddings);

// Ablation baseline: standard LSTM run in both directions, hidden states
// concatenated per token.
std::vector<TRef> encode_bilstm(Tape& tape, ParameterStore& store, const std::string& prefix,
                                const SrnConfig& cfg, TRef embeddings);

}  // namespace srx
