#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "srx/common.hpp"
#include "srx/optim.hpp"
#include "srx/rng.hpp"
#include "srx/spanhead.hpp"

using namespace srx;

namespace {

SpanProbs random_probs(int n, int labels, Rng& rng) {
  SpanProbs p;
  p.n = n;
  p.labels = labels;
  p.start = Tensor::zeros({n, labels});
  p.end = Tensor::zeros({n, labels});
  p.match = Tensor::zeros({n, n, labels});
  for (double& v : p.start.data) v = rng.uniform();
  for (double& v : p.end.data) v = rng.uniform();
  for (double& v : p.match.data) v = rng.uniform();
  return p;
}

// Exhaustive reference decoder: enumerate every (i, j, k) triple and apply
// the threshold rule literally.
std::vector<SpanPrediction> brute_force_decode(const SpanProbs& p, double threshold) {
  std::vector<SpanPrediction> out;
  for (int i = 0; i < p.n; ++i) {
    for (int j = 0; j < p.n; ++j) {
      for (int k = 0; k < p.labels; ++k) {
        if (i <= j && p.start_at(i, k) > threshold && p.end_at(j, k) > threshold &&
            p.match_at(i, j, k) > threshold) {
          out.push_back({i, j, k, p.match_at(i, j, k)});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("zero weights score 0.5 everywhere") {
  ParameterStore store;
  int d = 4, K = 2;
  store.create("h.Wst", Tensor::zeros({d, K}));
  store.create("h.bst", Tensor::zeros({K}));
  store.create("h.Wen", Tensor::zeros({d, K}));
  store.create("h.ben", Tensor::zeros({K}));
  store.create("h.Wm", Tensor::zeros({2 * d, K}));
  store.create("h.bm", Tensor::zeros({K}));
  Rng rng(1);
  Tape tape;
  TRef reps = tape.constant(gaussian_tensor({3, d}, 1.0, rng));
  SpanScores s = span_score(tape, store, "h.", reps, K);
  SpanProbs p = extract_probs(tape, s);
  for (double v : p.start.data) CHECK(v == 0.5);
  for (double v : p.end.data) CHECK(v == 0.5);
  for (double v : p.match.data) CHECK(v == 0.5);
  CHECK(p.match.shape == std::vector<int64_t>{3, 3, 2});
}

TEST_CASE("empty input scores empty tensors") {
  Rng rng(2);
  ParameterStore store;
  init_span_head(store, "h.", 4, 3, rng);
  Tape tape;
  TRef reps = tape.constant(Tensor::zeros({0, 4}));
  SpanScores s = span_score(tape, store, "h.", reps, 3);
  SpanProbs p = extract_probs(tape, s);
  CHECK(p.start.numel() == 0);
  CHECK(p.match.numel() == 0);
  CHECK(decode_spans(p, 0.5).empty());
}

TEST_CASE("decode threshold rule on a hand case") {
  SpanProbs p;
  p.n = 2;
  p.labels = 1;
  p.start = Tensor({2, 1}, {0.9, 0.1});
  p.end = Tensor({2, 1}, {0.2, 0.8});
  p.match = Tensor({2, 2, 1}, {0.1, 0.7, 0.1, 0.1});
  auto spans = decode_spans(p, 0.5);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == SpanPrediction{0, 1, 0, 0.7});
}

TEST_CASE("all probabilities below threshold decode to nothing") {
  SpanProbs p;
  p.n = 2;
  p.labels = 1;
  p.start = Tensor::full({2, 1}, 0.4);
  p.end = Tensor::full({2, 1}, 0.4);
  p.match = Tensor::full({2, 2, 1}, 0.4);
  CHECK(decode_spans(p, 0.5).empty());
}

TEST_CASE("exactly-at-threshold probabilities are rejected (strict inequality)") {
  SpanProbs p;
  p.n = 1;
  p.labels = 1;
  p.start = Tensor::full({1, 1}, 0.5);
  p.end = Tensor::full({1, 1}, 0.5);
  p.match = Tensor::full({1, 1, 1}, 0.5);
  CHECK(decode_spans(p, 0.5).empty());
}

TEST_CASE("decode equals brute-force enumeration on 200 random tensors") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    int n = static_cast<int>(rng.range(0, 6));
    int k = static_cast<int>(rng.range(1, 3));
    SpanProbs p = random_probs(n, k, rng);
    double threshold = rng.uniform(0.1, 0.9);
    CHECK(decode_spans(p, threshold) == brute_force_decode(p, threshold));
  }
}

TEST_CASE("decode is monotone in the threshold") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    SpanProbs p = random_probs(5, 2, rng);
    auto low = decode_spans(p, 0.3);
    auto high = decode_spans(p, 0.7);
    std::set<SpanPrediction> low_set(low.begin(), low.end());
    for (const SpanPrediction& s : high) CHECK(low_set.count(s) == 1);
  }
}

TEST_CASE("every decoded span satisfies i <= j") {
  Rng rng(321);
  SpanProbs p = random_probs(6, 3, rng);
  for (const SpanPrediction& s : decode_spans(p, 0.2)) CHECK(s.start <= s.end);
}

TEST_CASE("max span length cap restricts the decoder only") {
  SpanProbs p;
  p.n = 3;
  p.labels = 1;
  p.start = Tensor::full({3, 1}, 0.9);
  p.end = Tensor::full({3, 1}, 0.9);
  p.match = Tensor::full({3, 3, 1}, 0.9);
  auto unrestricted = decode_spans(p, 0.5);
  auto capped = decode_spans(p, 0.5, 1);
  CHECK(unrestricted.size() == 6);  // all i <= j pairs
  CHECK(capped.size() == 3);        // only single-token spans
}

TEST_CASE("invalid threshold rejected") {
  SpanProbs p;
  p.n = 0;
  p.labels = 1;
  p.start = Tensor::zeros({0, 1});
  p.end = Tensor::zeros({0, 1});
  p.match = Tensor::zeros({0, 0, 1});
  CHECK_THROWS_AS(decode_spans(p, 0.0), Error);
  CHECK_THROWS_AS(decode_spans(p, 1.0), Error);
}

TEST_CASE("label permutation equivariance of score") {
  Rng rng(7);
  int d = 4, K = 3, n = 4;
  ParameterStore store;
  init_span_head(store, "a.", d, K, rng);
  // head "b." holds the same weights with labels permuted by perm
  int perm[3] = {2, 0, 1};  // b's label k = a's label perm[k]
  ParameterStore store_b;
  for (const char* nm : {"Wst", "bst", "Wen", "ben", "Wm", "bm"}) {
    const Tensor& src = store.at(std::string("a.") + nm).value;
    Tensor dst = Tensor::zeros(src.shape);
    int64_t rows = src.ndim() == 2 ? src.rows() : 1;
    int64_t cols = src.ndim() == 2 ? src.cols() : src.shape[0];
    for (int64_t r = 0; r < rows; ++r) {
      for (int k = 0; k < K; ++k) {
        dst.data[static_cast<size_t>(r * cols + k)] =
            src.data[static_cast<size_t>(r * cols + perm[k])];
      }
    }
    store_b.create(std::string("b.") + nm, std::move(dst));
  }
  Tensor reps_data = gaussian_tensor({n, d}, 1.0, rng);
  Tape tape;
  TRef reps = tape.constant(reps_data);
  SpanProbs pa = extract_probs(tape, span_score(tape, store, "a.", reps, K));
  SpanProbs pb = extract_probs(tape, span_score(tape, store_b, "b.", reps, K));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) {
      CHECK(pb.start_at(i, k) == doctest::Approx(pa.start_at(i, perm[k])).epsilon(1e-14));
      CHECK(pb.end_at(i, k) == doctest::Approx(pa.end_at(i, perm[k])).epsilon(1e-14));
      for (int j = 0; j < n; ++j) {
        CHECK(pb.match_at(i, j, k) == doctest::Approx(pa.match_at(i, j, perm[k])).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("resolve_type_conflicts keeps the strongest label per span") {
  SUBCASE("max rule") {
    std::vector<SpanPrediction> spans = {{0, 1, 0, 0.9}, {0, 1, 1, 0.6}};
    auto out = resolve_type_conflicts(spans);
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == 0);
  }
  SUBCASE("disjoint spans unchanged") {
    std::vector<SpanPrediction> spans = {{0, 1, 0, 0.9}, {2, 3, 1, 0.6}};
    CHECK(resolve_type_conflicts(spans).size() == 2);
  }
  SUBCASE("equal probabilities keep the lowest label") {
    std::vector<SpanPrediction> spans = {{0, 1, 2, 0.7}, {0, 1, 0, 0.7}};
    auto out = resolve_type_conflicts(spans);
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == 0);
  }
}

TEST_CASE("gradient check on span head") {
  Rng rng(31);
  int d = 4, K = 2, n = 3;
  ParameterStore store;
  init_span_head(store, "h.", d, K, rng);
  Param& reps = store.create("reps", gaussian_tensor({n, d}, 1.0, rng));
  Tensor t_start = Tensor::zeros({n, K});
  Tensor t_end = Tensor::zeros({n, K});
  Tensor t_match = Tensor::zeros({n, n, K});
  t_start.data[0] = 1.0;
  t_end.data[3] = 1.0;
  t_match.data[5] = 1.0;

  auto f = [&]() {
    Tape tape;
    SpanScores s = span_score(tape, store, "h.", tape.param(reps), K);
    TRef loss = tape.add(
        tape.add(tape.bce_sum(s.start, t_start, Tensor::full({n, K}, 1.0)),
                 tape.bce_sum(s.end, t_end, Tensor::full({n, K}, 1.0))),
        tape.bce_sum(s.match, t_match, Tensor::full({n, n, K}, 1.0)));
    tape.backward(loss);
    return tape.scalar_value(loss);
  };
  FdReport report = finite_difference_check(f, store, 1e-5);
  CAPTURE(report.worst_name);
  CHECK(report.worst_rel_err <= 1e-4);
}
