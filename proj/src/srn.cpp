#include "srx/srn.hpp"

#include "srx/common.hpp"

namespace srx {

namespace {

// Forget-gate bias starts positive so early training keeps history.
Tensor gate_bias(int64_t total, int64_t forget_lo, int64_t forget_hi) {
  Tensor b = Tensor::zeros({total});
  for (int64_t i = forget_lo; i < forget_hi; ++i) b.data[static_cast<size_t>(i)] = 1.0;
  return b;
}

GateBundle3 make_gates3(Tape& tape, TRef preact, int d) {
  GateBundle3 g;
  g.rho_e = tape.sigmoid(tape.slice_cols(preact, 0, d));
  g.rho_s = tape.sigmoid(tape.slice_cols(preact, d, 2 * d));
  g.rho_o = tape.sigmoid(tape.slice_cols(preact, 2 * d, 3 * d));
  g.g_es = tape.mul(g.rho_e, g.rho_s);
  g.g_eo = tape.mul(g.rho_e, g.rho_o);
  g.g_so = tape.mul(g.rho_s, g.rho_o);
  g.g_eso = tape.mul(g.g_es, g.rho_o);
  g.g_e = tape.add(tape.sub(tape.sub(g.rho_e, g.g_es), g.g_eo), g.g_eso);
  g.g_s = tape.add(tape.sub(tape.sub(g.rho_s, g.g_es), g.g_so), g.g_eso);
  g.g_o = tape.add(tape.sub(tape.sub(g.rho_o, g.g_eo), g.g_so), g.g_eso);
  return g;
}

GateBundle2 make_gates2(Tape& tape, TRef preact, int d) {
  GateBundle2 g;
  g.rho_e = tape.sigmoid(tape.slice_cols(preact, 0, d));
  g.rho_r = tape.sigmoid(tape.slice_cols(preact, d, 2 * d));
  g.g_er = tape.mul(g.rho_e, g.rho_r);
  g.g_e = tape.sub(g.rho_e, g.g_er);
  g.g_r = tape.sub(g.rho_r, g.g_er);
  return g;
}

TRef affine(Tape& tape, ParameterStore& store, const std::string& w_name,
            const std::string& b_name, TRef input) {
  return tape.add(tape.matmul(input, tape.param(store.at(w_name))),
                  tape.param(store.at(b_name)));
}

}  // namespace

void init_srn3(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg, Rng& rng) {
  int64_t d = cfg.d_hidden;
  int64_t din = cfg.d_hidden + cfg.d_embed;
  store.create(prefix + "W1", glorot_uniform(din, 3 * d, rng));
  store.create(prefix + "b1", gate_bias(3 * d, 0, d));
  store.create(prefix + "W2", glorot_uniform(din, 3 * d, rng));
  store.create(prefix + "b2", Tensor::zeros({3 * d}));
  if (!cfg.share_master_weights) {
    store.create(prefix + "W3", glorot_uniform(din, 3 * d, rng));
    store.create(prefix + "b3", Tensor::zeros({3 * d}));
  }
  store.create(prefix + "Wlin", glorot_uniform(7 * d, d, rng));
  store.create(prefix + "blin", Tensor::zeros({d}));
}

void init_srn2(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg, Rng& rng) {
  int64_t d = cfg.d_hidden;
  int64_t din = cfg.d_hidden + cfg.d_embed;
  store.create(prefix + "W1", glorot_uniform(din, 3 * d, rng));
  store.create(prefix + "b1", gate_bias(3 * d, 0, d));
  store.create(prefix + "W2", glorot_uniform(din, 2 * d, rng));
  store.create(prefix + "b2", Tensor::zeros({2 * d}));
  if (!cfg.share_master_weights) {
    store.create(prefix + "W3", glorot_uniform(din, 2 * d, rng));
    store.create(prefix + "b3", Tensor::zeros({2 * d}));
  }
  store.create(prefix + "Wlin", glorot_uniform(3 * d, d, rng));
  store.create(prefix + "blin", Tensor::zeros({d}));
}

void init_srn3_bi(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg,
                  Rng& rng) {
  init_srn3(store, prefix + "fwd.", cfg, rng);
  init_srn3(store, prefix + "bwd.", cfg, rng);
}

void init_bilstm(ParameterStore& store, const std::string& prefix, const SrnConfig& cfg,
                 Rng& rng) {
  int64_t d = cfg.d_hidden;
  int64_t din = cfg.d_hidden + cfg.d_embed;
  for (const char* dir : {"fwd.", "bwd."}) {
    store.create(prefix + dir + "W", glorot_uniform(din, 4 * d, rng));
    store.create(prefix + dir + "b", gate_bias(4 * d, d, 2 * d));
  }
}

SrnStep3Out srn_step3(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const SrnConfig& cfg, TRef h_prev, TRef c_prev, TRef x_t) {
  int d = cfg.d_hidden;
  TRef joint = tape.concat_cols(std::array<TRef, 2>{h_prev, x_t});

  TRef z1 = affine(tape, store, prefix + "W1", prefix + "b1", joint);
  TRef f_t = tape.sigmoid(tape.slice_cols(z1, 0, d));
  TRef o_t = tape.sigmoid(tape.slice_cols(z1, d, 2 * d));
  TRef c_hat = tape.tanh(tape.slice_cols(z1, 2 * d, 3 * d));

  TRef c_hist = tape.mul(f_t, c_prev);

  SrnStep3Out out;
  out.gates_new = make_gates3(tape, affine(tape, store, prefix + "W2", prefix + "b2", joint), d);
  const std::string hist_w = cfg.share_master_weights ? "W2" : "W3";
  const std::string hist_b = cfg.share_master_weights ? "b2" : "b3";
  out.gates_hist = make_gates3(tape, affine(tape, store, prefix + hist_w, prefix + hist_b, joint), d);

  auto memory = [&](TRef hist_gate, TRef new_gate) {
    return tape.add(tape.mul(hist_gate, c_hist), tape.mul(new_gate, c_hat));
  };
  TRef s_e = memory(out.gates_hist.g_e, out.gates_new.g_e);
  TRef s_s = memory(out.gates_hist.g_s, out.gates_new.g_s);
  TRef s_o = memory(out.gates_hist.g_o, out.gates_new.g_o);
  TRef s_es = memory(out.gates_hist.g_es, out.gates_new.g_es);
  TRef s_eo = memory(out.gates_hist.g_eo, out.gates_new.g_eo);
  TRef s_so = memory(out.gates_hist.g_so, out.gates_new.g_so);
  TRef s_eso = memory(out.gates_hist.g_eso, out.gates_new.g_eso);

  TRef memories =
      tape.concat_cols(std::array<TRef, 7>{s_e, s_o, s_s, s_es, s_eo, s_so, s_eso});
  out.c = affine(tape, store, prefix + "Wlin", prefix + "blin", memories);
  out.h = tape.mul(o_t, tape.tanh(out.c));

  out.streams[kE] = tape.tanh(s_e);
  out.streams[kS] = tape.tanh(s_s);
  out.streams[kO] = tape.tanh(s_o);
  out.streams[kES] = tape.tanh(s_es);
  out.streams[kEO] = tape.tanh(s_eo);
  out.streams[kSO] = tape.tanh(s_so);
  out.streams[kESO] = tape.tanh(s_eso);
  return out;
}

SrnStep2Out srn_step2(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const SrnConfig& cfg, TRef h_prev, TRef c_prev, TRef x_t) {
  int d = cfg.d_hidden;
  TRef joint = tape.concat_cols(std::array<TRef, 2>{h_prev, x_t});

  TRef z1 = affine(tape, store, prefix + "W1", prefix + "b1", joint);
  TRef f_t = tape.sigmoid(tape.slice_cols(z1, 0, d));
  TRef o_t = tape.sigmoid(tape.slice_cols(z1, d, 2 * d));
  TRef c_hat = tape.tanh(tape.slice_cols(z1, 2 * d, 3 * d));

  TRef c_hist = tape.mul(f_t, c_prev);

  SrnStep2Out out;
  out.gates_new = make_gates2(tape, affine(tape, store, prefix + "W2", prefix + "b2", joint), d);
  const std::string hist_w = cfg.share_master_weights ? "W2" : "W3";
  const std::string hist_b = cfg.share_master_weights ? "b2" : "b3";
  out.gates_hist = make_gates2(tape, affine(tape, store, prefix + hist_w, prefix + hist_b, joint), d);

  auto memory = [&](TRef hist_gate, TRef new_gate) {
    return tape.add(tape.mul(hist_gate, c_hist), tape.mul(new_gate, c_hat));
  };
  TRef s_e = memory(out.gates_hist.g_e, out.gates_new.g_e);
  TRef s_r = memory(out.gates_hist.g_r, out.gates_new.g_r);
  TRef s_er = memory(out.gates_hist.g_er, out.gates_new.g_er);

  TRef memories = tape.concat_cols(std::array<TRef, 3>{s_e, s_r, s_er});
  out.c = affine(tape, store, prefix + "Wlin", prefix + "blin", memories);
  out.h = tape.mul(o_t, tape.tanh(out.c));

  out.h_e = tape.tanh(s_e);
  out.h_r = tape.tanh(s_r);
  out.h_er = tape.tanh(s_er);
  return out;
}

namespace {

std::vector<StreamRefs> run_srn3_direction(Tape& tape, ParameterStore& store,
                                           const std::string& prefix, const SrnConfig& cfg,
                                           TRef embeddings, bool reversed) {
  int64_t n = tape.value(embeddings).rows();
  std::vector<StreamRefs> out(static_cast<size_t>(n));
  TRef h = tape.constant(Tensor::zeros({1, cfg.d_hidden}));
  TRef c = tape.constant(Tensor::zeros({1, cfg.d_hidden}));
  for (int64_t step = 0; step < n; ++step) {
    int64_t t = reversed ? n - 1 - step : step;
    TRef x_t = tape.slice_rows(embeddings, t, t + 1);
    SrnStep3Out so = srn_step3(tape, store, prefix, cfg, h, c, x_t);
    h = so.h;
    c = so.c;
    out[static_cast<size_t>(t)] = so.streams;
  }
  return out;
}

}  // namespace

std::vector<StreamRefs> encode_srn3(Tape& tape, ParameterStore& store, const std::string& prefix,
                                    const SrnConfig& cfg, TRef embeddings, Direction direction) {
  switch (direction) {
    case Direction::Forward:
      return run_srn3_direction(tape, store, prefix, cfg, embeddings, false);
    case Direction::Backward:
      return run_srn3_direction(tape, store, prefix, cfg, embeddings, true);
    case Direction::Bidirectional: {
      auto fwd = run_srn3_direction(tape, store, prefix + "fwd.", cfg, embeddings, false);
      auto bwd = run_srn3_direction(tape, store, prefix + "bwd.", cfg, embeddings, true);
      std::vector<StreamRefs> out(fwd.size());
      for (size_t t = 0; t < fwd.size(); ++t) {
        for (int s = 0; s < 7; ++s) {
          out[t][static_cast<size_t>(s)] =
              tape.concat_cols(std::array<TRef, 2>{fwd[t][static_cast<size_t>(s)],
                                                   bwd[t][static_cast<size_t>(s)]});
        }
      }
      return out;
    }
  }
  throw Error("encode_srn3: bad direction");
}

std::vector<SrnStep2Out> encode_srn2_forward(Tape& tape, ParameterStore& store,
                                             const std::string& prefix, const SrnConfig& cfg,
                                             TRef embeddings) {
  int64_t n = tape.value(embeddings).rows();
  std::vector<SrnStep2Out> out;
  out.reserve(static_cast<size_t>(n));
  TRef h = tape.constant(Tensor::zeros({1, cfg.d_hidden}));
  TRef c = tape.constant(Tensor::zeros({1, cfg.d_hidden}));
  for (int64_t t = 0; t < n; ++t) {
    TRef x_t = tape.slice_rows(embeddings, t, t + 1);
    SrnStep2Out so = srn_step2(tape, store, prefix, cfg, h, c, x_t);
    h = so.h;
    c = so.c;
    out.push_back(so);
  }
  return out;
}

namespace {

std::vector<TRef> run_lstm_direction(Tape& tape, ParameterStore& store, const std::string& prefix,
                                     const SrnConfig& cfg, TRef embeddings, bool reversed) {
  int d = cfg.d_hidden;
  int64_t n = tape.value(embeddings).rows();
  std::vector<TRef> out(static_cast<size_t>(n));
  TRef h = tape.constant(Tensor::zeros({1, d}));
  TRef c = tape.constant(Tensor::zeros({1, d}));
  for (int64_t step = 0; step < n; ++step) {
    int64_t t = reversed ? n - 1 - step : step;
    TRef x_t = tape.slice_rows(embeddings, t, t + 1);
    TRef joint = tape.concat_cols(std::array<TRef, 2>{h, x_t});
    TRef z = affine(tape, store, prefix + "W", prefix + "b", joint);
    TRef i_g = tape.sigmoid(tape.slice_cols(z, 0, d));
    TRef f_g = tape.sigmoid(tape.slice_cols(z, d, 2 * d));
    TRef o_g = tape.sigmoid(tape.slice_cols(z, 2 * d, 3 * d));
    TRef g_g = tape.tanh(tape.slice_cols(z, 3 * d, 4 * d));
    c = tape.add(tape.mul(f_g, c), tape.mul(i_g, g_g));
    h = tape.mul(o_g, tape.tanh(c));
    out[static_cast<size_t>(t)] = h;
  }
  return out;
}

}  // namespace

std::vector<TRef> encode_bilstm(Tape& tape, ParameterStore& store, const std::string& prefix,
                                const SrnConfig& cfg, TRef embeddings) {
  auto fwd = run_lstm_direction(tape, store, prefix + "fwd.", cfg, embeddings, false);
  auto bwd = run_lstm_direction(tape, store, prefix + "bwd.", cfg, embeddings, true);
  std::vector<TRef> out(fwd.size());
  for (size_t t = 0; t < fwd.size(); ++t) {
    out[t] = tape.concat_cols(std::array<TRef, 2>{fwd[t], bwd[t]});
  }
  return out;
}

}  // namespace srx
