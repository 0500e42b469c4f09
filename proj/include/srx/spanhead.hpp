#pragma once

#include <string>
#include <vector>

#include "srx/optim.hpp"
#include "srx/store.hpp"
#include "srx/tape.hpp"

namespace srx {

// Unified span-extraction head: per-label start and end classifiers over
// token representations plus a start-end matching classifier over token
// pairs. Entity heads use one label per entity type, subject heads a
// single untyped label, object heads one label per relation type.

struct SpanPrediction {
  int start = 0;
  int end = 0;
  int label = 0;
  double prob = 0.0;  // match-classifier score

  bool operator==(const SpanPrediction&) const = default;
  auto operator<=>(const SpanPrediction&) const = default;
};

// Tape-side scores. match is an (n, n, K) tensor.
struct SpanScores {
  TRef start, end, match;
  int n = 0;
  int labels = 0;
};

// Plain-value probabilities for decoding.
struct SpanProbs {
  Tensor start, end, match;  // (n, K), (n, K), (n, n, K)
  int n = 0;
  int labels = 0;

  double start_at(int i, int k) const;
  double end_at(int j, int k) const;
  double match_at(int i, int j, int k) const;
};

// Parameter layout under `prefix`: Wst/bst, Wen/ben (d_in -> K),
// Wm/bm (2*d_in -> K); label k owns column k of each matrix.
void init_span_head(ParameterStore& store, const std::string& prefix, int d_in, int labels,
                    Rng& rng);

SpanScores span_score(Tape& tape, ParameterStore& store, const std::string& prefix, TRef reps,
                      int labels);

SpanProbs extract_probs(const Tape& tape, const SpanScores& scores);

// Emits (i, j, k) iff start[i,k] > t and end[j,k] > t and match[i,j,k] > t
// and i <= j, sorted by (i, j, k). Nested and overlapping spans are
// permitted. max_span_len of 0 means unrestricted.
std::vector<SpanPrediction> decode_spans(const SpanProbs& probs, double threshold,
                                         int max_span_len = 0);

// Keeps one prediction per (start, end): highest match probability wins,
// ties broken by lowest label index.
std::vector<SpanPrediction> resolve_type_conflicts(const std::vector<SpanPrediction>& spans);

}  // namespace srx
