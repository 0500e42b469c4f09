#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "srx/embedder.hpp"
#include "srx/optim.hpp"
#include "srx/rng.hpp"
#include "srx/srn.hpp"

using namespace srx;

namespace {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Straight-line scalar reimplementation of the selection recurrence, kept
// deliberately independent of the Tensor/Tape machinery. Weights come in as
// flat row-major arrays.
// ---------------------------------------------------------------------------

struct FlatParams {
  Vec W1, b1, W2, b2, W3, b3, Wlin, blin;
  int din = 0, d = 0, tasks = 3;
};

Vec affine_flat(const Vec& w, const Vec& b, const Vec& x, int din, int dout) {
  Vec out(static_cast<size_t>(dout), 0.0);
  for (int j = 0; j < dout; ++j) {
    double acc = b[static_cast<size_t>(j)];
    for (int i = 0; i < din; ++i) acc += x[static_cast<size_t>(i)] * w[static_cast<size_t>(i * dout + j)];
    out[static_cast<size_t>(j)] = acc;
  }
  return out;
}

struct OracleOut3 {
  Vec h, c;
  Vec streams[7];  // e, s, o, es, eo, so, eso
};

OracleOut3 oracle_step3(const FlatParams& p, const Vec& h_prev, const Vec& c_prev, const Vec& x) {
  int d = p.d;
  Vec joint(h_prev);
  joint.insert(joint.end(), x.begin(), x.end());

  Vec z1 = affine_flat(p.W1, p.b1, joint, p.din, 3 * d);
  Vec f(d), o(d), c_hat(d), c_hist(d);
  for (int i = 0; i < d; ++i) {
    f[i] = 1.0 / (1.0 + std::exp(-z1[static_cast<size_t>(i)]));
    o[i] = 1.0 / (1.0 + std::exp(-z1[static_cast<size_t>(d + i)]));
    c_hat[i] = std::tanh(z1[static_cast<size_t>(2 * d + i)]);
    c_hist[i] = f[i] * c_prev[static_cast<size_t>(i)];
  }

  auto bundle = [&](const Vec& w, const Vec& b) {
    Vec z = affine_flat(w, b, joint, p.din, 3 * d);
    // rho_e, rho_s, rho_o then shared products and inclusion-exclusion
    std::array<Vec, 10> g;  // e,s,o masters; es,eo,so,eso; ge,gs,go
    for (auto& v : g) v.assign(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
      double re = 1.0 / (1.0 + std::exp(-z[static_cast<size_t>(i)]));
      double rs = 1.0 / (1.0 + std::exp(-z[static_cast<size_t>(d + i)]));
      double ro = 1.0 / (1.0 + std::exp(-z[static_cast<size_t>(2 * d + i)]));
      g[0][i] = re; g[1][i] = rs; g[2][i] = ro;
      g[3][i] = re * rs; g[4][i] = re * ro; g[5][i] = rs * ro; g[6][i] = re * rs * ro;
      g[7][i] = re - g[3][i] - g[4][i] + g[6][i];
      g[8][i] = rs - g[3][i] - g[5][i] + g[6][i];
      g[9][i] = ro - g[4][i] - g[5][i] + g[6][i];
    }
    return g;
  };
  auto gn = bundle(p.W2, p.b2);
  auto gh = bundle(p.W3, p.b3);

  // memory = hist_gate * c_hist + new_gate * c_hat, for e,s,o,es,eo,so,eso
  int order_new[7] = {7, 8, 9, 3, 4, 5, 6};
  Vec mem[7];
  for (int m = 0; m < 7; ++m) {
    mem[m].assign(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
      mem[m][i] = gh[order_new[m]][i] * c_hist[i] + gn[order_new[m]][i] * c_hat[i];
    }
  }

  // combiner input order: e, o, s, es, eo, so, eso
  Vec cat;
  int cat_order[7] = {0, 2, 1, 3, 4, 5, 6};
  for (int m = 0; m < 7; ++m) cat.insert(cat.end(), mem[cat_order[m]].begin(), mem[cat_order[m]].end());
  Vec c_t = affine_flat(p.Wlin, p.blin, cat, 7 * d, d);

  OracleOut3 out;
  out.c = c_t;
  out.h.assign(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) out.h[i] = o[i] * std::tanh(c_t[static_cast<size_t>(i)]);
  for (int m = 0; m < 7; ++m) {
    out.streams[m].assign(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) out.streams[m][i] = std::tanh(mem[m][i]);
  }
  return out;
}

struct OracleOut2 {
  Vec h, c, h_e, h_r, h_er;
};

OracleOut2 oracle_step2(const FlatParams& p, const Vec& h_prev, const Vec& c_prev, const Vec& x) {
  int d = p.d;
  Vec joint(h_prev);
  joint.insert(joint.end(), x.begin(), x.end());

  Vec z1 = affine_flat(p.W1, p.b1, joint, p.din, 3 * d);
  Vec f(d), o(d), c_hat(d), c_hist(d);
  for (int i = 0; i < d; ++i) {
    f[i] = 1.0 / (1.0 + std::exp(-z1[static_cast<size_t>(i)]));
    o[i] = 1.0 / (1.0 + std::exp(-z1[static_cast<size_t>(d + i)]));
    c_hat[i] = std::tanh(z1[static_cast<size_t>(2 * d + i)]);
    c_hist[i] = f[i] * c_prev[static_cast<size_t>(i)];
  }
  auto bundle = [&](const Vec& w, const Vec& b) {
    Vec z = affine_flat(w, b, joint, p.din, 2 * d);
    std::array<Vec, 5> g;  // rho_e, rho_r, g_er, g_e, g_r
    for (auto& v : g) v.assign(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
      double re = 1.0 / (1.0 + std::exp(-z[static_cast<size_t>(i)]));
      double rr = 1.0 / (1.0 + std::exp(-z[static_cast<size_t>(d + i)]));
      g[0][i] = re; g[1][i] = rr; g[2][i] = re * rr;
      g[3][i] = re - g[2][i]; g[4][i] = rr - g[2][i];
    }
    return g;
  };
  auto gn = bundle(p.W2, p.b2);
  auto gh = bundle(p.W3, p.b3);

  Vec mem[3];
  int order[3] = {3, 4, 2};  // e, r, er
  for (int m = 0; m < 3; ++m) {
    mem[m].assign(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) mem[m][i] = gh[order[m]][i] * c_hist[i] + gn[order[m]][i] * c_hat[i];
  }
  Vec cat;
  for (int m = 0; m < 3; ++m) cat.insert(cat.end(), mem[m].begin(), mem[m].end());
  Vec c_t = affine_flat(p.Wlin, p.blin, cat, 3 * d, d);

  OracleOut2 out;
  out.c = c_t;
  out.h.assign(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) out.h[i] = o[i] * std::tanh(c_t[static_cast<size_t>(i)]);
  out.h_e.assign(static_cast<size_t>(d), 0.0);
  out.h_r.assign(static_cast<size_t>(d), 0.0);
  out.h_er.assign(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    out.h_e[i] = std::tanh(mem[0][i]);
    out.h_r[i] = std::tanh(mem[1][i]);
    out.h_er[i] = std::tanh(mem[2][i]);
  }
  return out;
}

FlatParams flatten3(const ParameterStore& store, const std::string& prefix, const SrnConfig& cfg) {
  FlatParams p;
  p.d = cfg.d_hidden;
  p.din = cfg.d_hidden + cfg.d_embed;
  p.W1 = store.at(prefix + "W1").value.data;
  p.b1 = store.at(prefix + "b1").value.data;
  p.W2 = store.at(prefix + "W2").value.data;
  p.b2 = store.at(prefix + "b2").value.data;
  p.W3 = store.at(prefix + (cfg.share_master_weights ? "W2" : "W3")).value.data;
  p.b3 = store.at(prefix + (cfg.share_master_weights ? "b2" : "b3")).value.data;
  p.Wlin = store.at(prefix + "Wlin").value.data;
  p.blin = store.at(prefix + "blin").value.data;
  return p;
}

void make_zero_srn3(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg) {
  int64_t d = cfg.d_hidden, din = cfg.d_hidden + cfg.d_embed;
  store.create(prefix + "W1", Tensor::zeros({din, 3 * d}));
  store.create(prefix + "b1", Tensor::zeros({3 * d}));
  store.create(prefix + "W2", Tensor::zeros({din, 3 * d}));
  store.create(prefix + "b2", Tensor::zeros({3 * d}));
  store.create(prefix + "W3", Tensor::zeros({din, 3 * d}));
  store.create(prefix + "b3", Tensor::zeros({3 * d}));
  store.create(prefix + "Wlin", Tensor::zeros({7 * d, d}));
  store.create(prefix + "blin", Tensor::zeros({d}));
}

double max_abs_diff(const Vec& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("zero-everything step: gates 0.5, shared 0.125, outputs 0") {
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  make_zero_srn3(store, "z.", cfg);
  Tape tape;
  TRef h0 = tape.constant(Tensor::zeros({1, 4}));
  TRef c0 = tape.constant(Tensor::zeros({1, 4}));
  TRef x = tape.constant(Tensor::zeros({1, 3}));
  SrnStep3Out out = srn_step3(tape, store, "z.", cfg, h0, c0, x);

  for (TRef master : {out.gates_new.rho_e, out.gates_new.rho_s, out.gates_new.rho_o,
                      out.gates_hist.rho_e}) {
    for (double v : tape.value(master).data) CHECK(v == 0.5);
  }
  for (double v : tape.value(out.gates_new.g_eso).data) CHECK(v == doctest::Approx(0.125).epsilon(1e-15));
  for (double v : tape.value(out.gates_new.g_e).data) CHECK(v == doctest::Approx(0.125).epsilon(1e-15));
  // inclusion-exclusion at rho = 0.5: 0.125 + 0.25 + 0.25 - 0.125 = 0.5
  const Tensor& ge = tape.value(out.gates_new.g_e);
  const Tensor& ges = tape.value(out.gates_new.g_es);
  const Tensor& geo = tape.value(out.gates_new.g_eo);
  const Tensor& geso = tape.value(out.gates_new.g_eso);
  for (size_t i = 0; i < ge.data.size(); ++i) {
    CHECK(ge.data[i] + ges.data[i] + geo.data[i] - geso.data[i] == doctest::Approx(0.5).epsilon(1e-15));
  }
  for (double v : tape.value(out.c).data) CHECK(v == 0.0);
  for (double v : tape.value(out.h).data) CHECK(v == 0.0);
  for (const TRef& s : out.streams) {
    for (double v : tape.value(s).data) CHECK(v == 0.0);
  }
}

TEST_CASE("two-task zero step: g_er 0.25, independents 0.25, streams 0") {
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  int64_t d = 4, din = 7;
  store.create("z.W1", Tensor::zeros({din, 3 * d}));
  store.create("z.b1", Tensor::zeros({3 * d}));
  store.create("z.W2", Tensor::zeros({din, 2 * d}));
  store.create("z.b2", Tensor::zeros({2 * d}));
  store.create("z.W3", Tensor::zeros({din, 2 * d}));
  store.create("z.b3", Tensor::zeros({2 * d}));
  store.create("z.Wlin", Tensor::zeros({3 * d, d}));
  store.create("z.blin", Tensor::zeros({d}));
  Tape tape;
  TRef h0 = tape.constant(Tensor::zeros({1, 4}));
  TRef c0 = tape.constant(Tensor::zeros({1, 4}));
  TRef x = tape.constant(Tensor::zeros({1, 3}));
  SrnStep2Out out = srn_step2(tape, store, "z.", cfg, h0, c0, x);
  for (double v : tape.value(out.gates_new.g_er).data) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  for (double v : tape.value(out.gates_new.g_e).data) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  for (double v : tape.value(out.gates_new.g_r).data) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  for (TRef s : {out.h_e, out.h_r, out.h_er}) {
    for (double v : tape.value(s).data) CHECK(v == 0.0);
  }
}

TEST_CASE("gate identities hold elementwise on random steps") {
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    Rng rng(seed);
    SrnConfig cfg{5, 6, false};
    ParameterStore store;
    init_srn3(store, "s.", cfg, rng);
    Tape tape;
    TRef h0 = tape.constant(gaussian_tensor({2, 6}, 0.7, rng));
    TRef c0 = tape.constant(gaussian_tensor({2, 6}, 0.7, rng));
    TRef x = tape.constant(gaussian_tensor({2, 5}, 1.0, rng));
    SrnStep3Out out = srn_step3(tape, store, "s.", cfg, h0, c0, x);

    for (const GateBundle3* b : {&out.gates_new, &out.gates_hist}) {
      const Tensor& re = tape.value(b->rho_e);
      const Tensor& rs = tape.value(b->rho_s);
      const Tensor& ro = tape.value(b->rho_o);
      const Tensor& ges = tape.value(b->g_es);
      const Tensor& geo = tape.value(b->g_eo);
      const Tensor& gso = tape.value(b->g_so);
      const Tensor& geso = tape.value(b->g_eso);
      const Tensor& ge = tape.value(b->g_e);
      const Tensor& gs = tape.value(b->g_s);
      const Tensor& go = tape.value(b->g_o);
      for (size_t i = 0; i < re.data.size(); ++i) {
        // inclusion-exclusion per task
        CHECK(std::fabs(ge.data[i] + ges.data[i] + geo.data[i] - geso.data[i] - re.data[i]) <= 1e-12);
        CHECK(std::fabs(gs.data[i] + ges.data[i] + gso.data[i] - geso.data[i] - rs.data[i]) <= 1e-12);
        CHECK(std::fabs(go.data[i] + geo.data[i] + gso.data[i] - geso.data[i] - ro.data[i]) <= 1e-12);
        // factored form, hence nonnegative
        CHECK(std::fabs(ge.data[i] - re.data[i] * (1 - rs.data[i]) * (1 - ro.data[i])) <= 1e-12);
        CHECK(std::fabs(gs.data[i] - rs.data[i] * (1 - re.data[i]) * (1 - ro.data[i])) <= 1e-12);
        CHECK(std::fabs(go.data[i] - ro.data[i] * (1 - re.data[i]) * (1 - rs.data[i])) <= 1e-12);
        CHECK(ge.data[i] >= 0.0);
        CHECK(ge.data[i] <= 1.0);
        // gate range
        CHECK(re.data[i] > 0.0);
        CHECK(re.data[i] < 1.0);
      }
    }
    // state bound and stream range
    for (double v : tape.value(out.h).data) CHECK(std::fabs(v) < 1.0);
    for (const TRef& s : out.streams) {
      for (double v : tape.value(s).data) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
      }
    }
  }
}

TEST_CASE("two-task identities hold on random steps") {
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    Rng rng(seed * 31);
    SrnConfig cfg{5, 6, false};
    ParameterStore store;
    init_srn2(store, "s.", cfg, rng);
    Tape tape;
    TRef h0 = tape.constant(gaussian_tensor({1, 6}, 0.7, rng));
    TRef c0 = tape.constant(gaussian_tensor({1, 6}, 0.7, rng));
    TRef x = tape.constant(gaussian_tensor({1, 5}, 1.0, rng));
    SrnStep2Out out = srn_step2(tape, store, "s.", cfg, h0, c0, x);
    for (const GateBundle2* b : {&out.gates_new, &out.gates_hist}) {
      const Tensor& re = tape.value(b->rho_e);
      const Tensor& rr = tape.value(b->rho_r);
      const Tensor& ger = tape.value(b->g_er);
      const Tensor& ge = tape.value(b->g_e);
      const Tensor& gr = tape.value(b->g_r);
      for (size_t i = 0; i < re.data.size(); ++i) {
        CHECK(std::fabs(ge.data[i] + ger.data[i] - re.data[i]) <= 1e-12);
        CHECK(std::fabs(gr.data[i] + ger.data[i] - rr.data[i]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("step3 matches the straight-line reimplementation") {
  Rng rng(1234);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_srn3(store, "s.", cfg, rng);
  Vec h_prev(4), c_prev(4), x(3);
  for (double& v : h_prev) v = rng.uniform(-0.8, 0.8);
  for (double& v : c_prev) v = rng.uniform(-0.8, 0.8);
  for (double& v : x) v = rng.uniform(-1.5, 1.5);

  Tape tape;
  TRef h0 = tape.constant(Tensor({1, 4}, Vec(h_prev)));
  TRef c0 = tape.constant(Tensor({1, 4}, Vec(c_prev)));
  TRef xr = tape.constant(Tensor({1, 3}, Vec(x)));
  SrnStep3Out out = srn_step3(tape, store, "s.", cfg, h0, c0, xr);

  OracleOut3 expect = oracle_step3(flatten3(store, "s.", cfg), h_prev, c_prev, x);
  CHECK(max_abs_diff(expect.h, tape.value(out.h).data) <= 1e-12);
  CHECK(max_abs_diff(expect.c, tape.value(out.c).data) <= 1e-12);
  for (int m = 0; m < 7; ++m) {
    CHECK(max_abs_diff(expect.streams[m], tape.value(out.streams[static_cast<size_t>(m)]).data) <= 1e-12);
  }
}

TEST_CASE("step2 matches the straight-line reimplementation") {
  Rng rng(77);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_srn2(store, "s.", cfg, rng);
  Vec h_prev(4), c_prev(4), x(3);
  for (double& v : h_prev) v = rng.uniform(-0.8, 0.8);
  for (double& v : c_prev) v = rng.uniform(-0.8, 0.8);
  for (double& v : x) v = rng.uniform(-1.5, 1.5);

  Tape tape;
  TRef h0 = tape.constant(Tensor({1, 4}, Vec(h_prev)));
  TRef c0 = tape.constant(Tensor({1, 4}, Vec(c_prev)));
  TRef xr = tape.constant(Tensor({1, 3}, Vec(x)));
  SrnStep2Out out = srn_step2(tape, store, "s.", cfg, h0, c0, xr);

  FlatParams p;
  p.d = 4;
  p.din = 7;
  p.W1 = store.at("s.W1").value.data;
  p.b1 = store.at("s.b1").value.data;
  p.W2 = store.at("s.W2").value.data;
  p.b2 = store.at("s.b2").value.data;
  p.W3 = store.at("s.W3").value.data;
  p.b3 = store.at("s.b3").value.data;
  p.Wlin = store.at("s.Wlin").value.data;
  p.blin = store.at("s.blin").value.data;
  OracleOut2 expect = oracle_step2(p, h_prev, c_prev, x);
  CHECK(max_abs_diff(expect.h, tape.value(out.h).data) <= 1e-12);
  CHECK(max_abs_diff(expect.h_e, tape.value(out.h_e).data) <= 1e-12);
  CHECK(max_abs_diff(expect.h_r, tape.value(out.h_r).data) <= 1e-12);
  CHECK(max_abs_diff(expect.h_er, tape.value(out.h_er).data) <= 1e-12);
}

TEST_CASE("share_master_weights reuses the current-state master weights") {
  Rng rng(5);
  SrnConfig cfg{3, 4, true};
  ParameterStore store;
  init_srn3(store, "s.", cfg, rng);
  CHECK_FALSE(store.contains("s.W3"));
  Tape tape;
  TRef h0 = tape.constant(Tensor::zeros({1, 4}));
  TRef c0 = tape.constant(Tensor::zeros({1, 4}));
  TRef x = tape.constant(gaussian_tensor({1, 3}, 1.0, rng));
  SrnStep3Out out = srn_step3(tape, store, "s.", cfg, h0, c0, x);
  CHECK(tape.value(out.gates_new.rho_e).data == tape.value(out.gates_hist.rho_e).data);
}

TEST_CASE("encode n=0 yields empty stream sequence") {
  Rng rng(5);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_srn3(store, "s.", cfg, rng);
  Tape tape;
  TRef emb = tape.constant(Tensor::zeros({0, 3}));
  CHECK(encode_srn3(tape, store, "s.", cfg, emb, Direction::Forward).empty());
}

TEST_CASE("n=1 forward equals n=1 backward with shared params") {
  Rng rng(6);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_srn3(store, "s.", cfg, rng);
  Tape tape;
  TRef emb = tape.constant(gaussian_tensor({1, 3}, 1.0, rng));
  auto fwd = encode_srn3(tape, store, "s.", cfg, emb, Direction::Forward);
  auto bwd = encode_srn3(tape, store, "s.", cfg, emb, Direction::Backward);
  REQUIRE(fwd.size() == 1);
  REQUIRE(bwd.size() == 1);
  for (int s = 0; s < 7; ++s) {
    CHECK(tape.value(fwd[0][static_cast<size_t>(s)]).data == tape.value(bwd[0][static_cast<size_t>(s)]).data);
  }
}

TEST_CASE("forward causality: perturbing position t+1 leaves positions <= t unchanged") {
  Rng rng(8);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_srn3(store, "s.", cfg, rng);

  Tensor base = gaussian_tensor({3, 3}, 1.0, rng);
  Tensor perturbed = base;
  perturbed.at(2, 1) += 0.37;  // touch only the last token

  auto run = [&](const Tensor& emb_data) {
    Tape tape;
    TRef emb = tape.constant(emb_data);
    auto streams = encode_srn3(tape, store, "s.", cfg, emb, Direction::Forward);
    std::vector<std::vector<double>> flat;
    for (const auto& tok : streams) {
      std::vector<double> row;
      for (const TRef& s : tok) {
        const Tensor& v = tape.value(s);
        row.insert(row.end(), v.data.begin(), v.data.end());
      }
      flat.push_back(std::move(row));
    }
    return flat;
  };
  auto a = run(base);
  auto b = run(perturbed);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
  CHECK(a[2] != b[2]);
}

TEST_CASE("bidirectional encoding doubles stream width") {
  Rng rng(9);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_srn3_bi(store, "s.", cfg, rng);
  Tape tape;
  TRef emb = tape.constant(gaussian_tensor({2, 3}, 1.0, rng));
  auto streams = encode_srn3(tape, store, "s.", cfg, emb, Direction::Bidirectional);
  REQUIRE(streams.size() == 2);
  CHECK(tape.value(streams[0][kE]).cols() == 8);
}

TEST_CASE("bilstm zero weights give zero hidden states; n=0 empty") {
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  for (const char* dir : {"l.fwd.", "l.bwd."}) {
    store.create(std::string(dir) + "W", Tensor::zeros({7, 16}));
    store.create(std::string(dir) + "b", Tensor::zeros({16}));
  }
  Tape tape;
  TRef emb = tape.constant(Tensor::full({2, 3}, 0.5));
  auto hs = encode_bilstm(tape, store, "l.", cfg, emb);
  REQUIRE(hs.size() == 2);
  for (TRef h : hs) {
    for (double v : tape.value(h).data) CHECK(v == 0.0);
  }
  TRef empty = tape.constant(Tensor::zeros({0, 3}));
  CHECK(encode_bilstm(tape, store, "l.", cfg, empty).empty());
}

TEST_CASE("gradient check: srn3 five-token sequence loss") {
  Rng rng(11);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_srn3(store, "s.", cfg, rng);
  Param& emb = store.create("emb", gaussian_tensor({5, 3}, 1.0, rng));
  Tensor coeff = gaussian_tensor({1, 4}, 1.0, rng);

  auto f = [&]() {
    Tape tape;
    auto streams = encode_srn3(tape, store, "s.", cfg, tape.param(emb), Direction::Forward);
    TRef loss = tape.constant(Tensor::scalar(0.0));
    TRef c = tape.constant(coeff);
    for (const auto& tok : streams) {
      for (const TRef& s : tok) loss = tape.add(loss, tape.sum_all(tape.mul(s, c)));
    }
    tape.backward(loss);
    return tape.scalar_value(loss);
  };
  FdReport report = finite_difference_check(f, store, 1e-5);
  CAPTURE(report.worst_name);
  CHECK(report.worst_rel_err <= 1e-4);
}

TEST_CASE("gradient check: srn2 step loss") {
  Rng rng(13);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_srn2(store, "s.", cfg, rng);
  Param& emb = store.create("emb", gaussian_tensor({4, 3}, 1.0, rng));
  Tensor coeff = gaussian_tensor({1, 4}, 1.0, rng);

  auto f = [&]() {
    Tape tape;
    auto steps = encode_srn2_forward(tape, store, "s.", cfg, tape.param(emb));
    TRef loss = tape.constant(Tensor::scalar(0.0));
    TRef c = tape.constant(coeff);
    for (const auto& st : steps) {
      for (TRef s : {st.h_e, st.h_r, st.h_er, st.h}) {
        loss = tape.add(loss, tape.sum_all(tape.mul(s, c)));
      }
    }
    tape.backward(loss);
    return tape.scalar_value(loss);
  };
  FdReport report = finite_difference_check(f, store, 1e-5);
  CHECK(report.worst_rel_err <= 1e-4);
}

TEST_CASE("gradient check: bilstm sequence loss") {
  Rng rng(17);
  SrnConfig cfg{3, 4, false};
  ParameterStore store;
  init_bilstm(store, "l.", cfg, rng);
  Param& emb = store.create("emb", gaussian_tensor({4, 3}, 1.0, rng));
  Tensor coeff = gaussian_tensor({1, 8}, 1.0, rng);

  auto f = [&]() {
    Tape tape;
    auto hs = encode_bilstm(tape, store, "l.", cfg, tape.param(emb));
    TRef loss = tape.constant(Tensor::scalar(0.0));
    TRef c = tape.constant(coeff);
    for (TRef h : hs) loss = tape.add(loss, tape.sum_all(tape.mul(h, c)));
    tape.backward(loss);
    return tape.scalar_value(loss);
  };
  FdReport report = finite_difference_check(f, store, 1e-5);
  CHECK(report.worst_rel_err <= 1e-4);
}

TEST_CASE("encoding is deterministic") {
  auto run = [&]() {
    Rng rng(21);
    SrnConfig cfg{3, 4, false};
    ParameterStore store;
    init_srn3(store, "s.", cfg, rng);
    Tape tape;
    TRef emb = tape.constant(gaussian_tensor({4, 3}, 1.0, rng));
    auto streams = encode_srn3(tape, store, "s.", cfg, emb, Direction::Forward);
    std::vector<double> flat;
    for (const auto& tok : streams) {
      for (const TRef& s : tok) {
        const Tensor& v = tape.value(s);
        flat.insert(flat.end(), v.data.begin(), v.data.end());
      }
    }
    return flat;
  };
  CHECK(run() == run());
}
