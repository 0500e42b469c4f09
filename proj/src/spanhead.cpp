#include "srx/spanhead.hpp"

#include <algorithm>
#include <map>

#include "srx/common.hpp"

namespace srx {

double SpanProbs::start_at(int i, int k) const {
  return start.data[static_cast<size_t>(i * labels + k)];
}

double SpanProbs::end_at(int j, int k) const {
  return end.data[static_cast<size_t>(j * labels + k)];
}

double SpanProbs::match_at(int i, int j, int k) const {
  return match.data[static_cast<size_t>((i * n + j) * labels + k)];
}

void init_span_head(ParameterStore& store, const std::string& prefix, int d_in, int labels,
                    Rng& rng) {
  store.create(prefix + "Wst", glorot_uniform(d_in, labels, rng));
  store.create(prefix + "bst", Tensor::zeros({labels}));
  store.create(prefix + "Wen", glorot_uniform(d_in, labels, rng));
  store.create(prefix + "ben", Tensor::zeros({labels}));
  store.create(prefix + "Wm", glorot_uniform(2 * d_in, labels, rng));
  store.create(prefix + "bm", Tensor::zeros({labels}));
}

SpanScores span_score(Tape& tape, ParameterStore& store, const std::string& prefix, TRef reps,
                      int labels) {
  const Tensor& r = tape.value(reps);
  int n = static_cast<int>(r.rows());

  auto head = [&](const char* w, const char* b, TRef input) {
    return tape.sigmoid(tape.add(tape.matmul(input, tape.param(store.at(prefix + w))),
                                 tape.param(store.at(prefix + b))));
  };

  SpanScores out;
  out.n = n;
  out.labels = labels;
  out.start = head("Wst", "bst", reps);
  out.end = head("Wen", "ben", reps);
  // all ordered token pairs: row i*n+j holds [reps_i ; reps_j]
  TRef lhs = tape.repeat_rows_each(reps, n);
  TRef rhs = tape.tile_rows(reps, n);
  TRef pairs = tape.concat_cols(std::array<TRef, 2>{lhs, rhs});
  TRef match2d = head("Wm", "bm", pairs);
  out.match = tape.reshape(match2d, {n, n, labels});
  return out;
}

SpanProbs extract_probs(const Tape& tape, const SpanScores& scores) {
  SpanProbs p;
  p.n = scores.n;
  p.labels = scores.labels;
  p.start = tape.value(scores.start);
  p.end = tape.value(scores.end);
  p.match = tape.value(scores.match);
  return p;
}

std::vector<SpanPrediction> decode_spans(const SpanProbs& probs, double threshold,
                                         int max_span_len) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error("decode_spans: threshold must lie in (0, 1)");
  }
  std::vector<SpanPrediction> out;
  for (int i = 0; i < probs.n; ++i) {
    for (int j = i; j < probs.n; ++j) {
      if (max_span_len > 0 && j - i + 1 > max_span_len) break;
      for (int k = 0; k < probs.labels; ++k) {
        if (probs.start_at(i, k) > threshold && probs.end_at(j, k) > threshold &&
            probs.match_at(i, j, k) > threshold) {
          out.push_back({i, j, k, probs.match_at(i, j, k)});
        }
      }
    }
  }
  return out;
}

std::vector<SpanPrediction> resolve_type_conflicts(const std::vector<SpanPrediction>& spans) {
  std::map<std::pair<int, int>, SpanPrediction> best;
  for (const SpanPrediction& s : spans) {
    auto key = std::make_pair(s.start, s.end);
    auto it = best.find(key);
    if (it == best.end() || s.prob > it->second.prob ||
        (s.prob == it->second.prob && s.label < it->second.label)) {
      best[key] = s;
    }
  }
  std::vector<SpanPrediction> out;
  out.reserve(best.size());
  for (const auto& [key, s] : best) out.push_back(s);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace srx
