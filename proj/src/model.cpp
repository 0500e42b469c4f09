#include "srx/model.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "srx/common.hpp"

namespace srx {

std::string strategy_name(Strategy s) { return s == Strategy::Early ? "early" : "late"; }

Strategy strategy_from_name(const std::string& name) {
  if (name == "early") return Strategy::Early;
  if (name == "late") return Strategy::Late;
  throw DataError("unknown strategy '" + name + "' (expected early|late)");
}

std::string encoder_name(EncoderKind e) {
  switch (e) {
    case EncoderKind::Srn: return "srn";
    case EncoderKind::BiSrn: return "bisrn";
    case EncoderKind::BiLstm: return "bilstm";
  }
  return "?";
}

EncoderKind encoder_from_name(const std::string& name) {
  if (name == "srn") return EncoderKind::Srn;
  if (name == "bisrn") return EncoderKind::BiSrn;
  if (name == "bilstm") return EncoderKind::BiLstm;
  throw DataError("unknown encoder '" + name + "' (expected srn|bisrn|bilstm)");
}

Model Model::create(const ModelConfig& cfg, std::vector<std::string> entity_types,
                    std::vector<std::string> relation_types, Vocabulary vocab, uint64_t seed) {
  Model m;
  m.cfg = cfg;
  m.entity_types = std::move(entity_types);
  m.relation_types = std::move(relation_types);
  m.vocab = std::move(vocab);

  Rng rng(seed);
  init_embedding_table(m.store, m.vocab.size(), cfg.d_embed, rng);

  SrnConfig scfg{cfg.d_embed, cfg.d_hidden, cfg.share_master_weights};
  switch (cfg.encoder) {
    case EncoderKind::Srn: init_srn3(m.store, "enc.", scfg, rng); break;
    case EncoderKind::BiSrn: init_srn3_bi(m.store, "enc.", scfg, rng); break;
    case EncoderKind::BiLstm: init_bilstm(m.store, "enc.", scfg, rng); break;
  }

  if (cfg.strategy == Strategy::Late) {
    m.store.create(kEntityTable,
                   gaussian_tensor({m.entity_labels() + 1, cfg.d_type}, 0.25, rng));
    m.store.create(kSubjectTable, gaussian_tensor({2, cfg.d_type}, 0.25, rng));
  }

  init_span_head(m.store, "head.e.", m.entity_rep_width(), m.entity_labels(), rng);
  init_span_head(m.store, "head.s.", m.subject_rep_width(), 1, rng);
  init_span_head(m.store, "head.o.", m.object_rep_width(), m.relation_labels(), rng);
  return m;
}

void Model::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  store.save((std::filesystem::path(dir) / "params.bin").string());
  vocab.save((std::filesystem::path(dir) / "vocab.txt").string());
  nlohmann::json j;
  j["format_version"] = 1;
  j["d_embed"] = cfg.d_embed;
  j["d_hidden"] = cfg.d_hidden;
  j["d_type"] = cfg.d_type;
  j["threshold"] = cfg.threshold;
  j["max_span_len"] = cfg.max_span_len;
  j["strategy"] = strategy_name(cfg.strategy);
  j["encoder"] = encoder_name(cfg.encoder);
  j["subject_markers_only"] = cfg.subject_markers_only;
  j["share_master_weights"] = cfg.share_master_weights;
  j["entity_types"] = entity_types;
  j["relation_types"] = relation_types;
  std::ofstream out(std::filesystem::path(dir) / "model.json", std::ios::trunc);
  if (!out) throw DataError("model: cannot write '" + dir + "/model.json'");
  out << j.dump(2) << "\n";
}

Model Model::load(const std::string& dir) {
  std::ifstream in(std::filesystem::path(dir) / "model.json");
  if (!in) throw DataError("model: cannot open '" + dir + "/model.json'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model: bad model.json: " + std::string(e.what()));
  }
  Model m;
  try {
    m.cfg.d_embed = j.at("d_embed").get<int>();
    m.cfg.d_hidden = j.at("d_hidden").get<int>();
    m.cfg.d_type = j.at("d_type").get<int>();
    m.cfg.threshold = j.at("threshold").get<double>();
    m.cfg.max_span_len = j.at("max_span_len").get<int>();
    m.cfg.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    m.cfg.encoder = encoder_from_name(j.at("encoder").get<std::string>());
    m.cfg.subject_markers_only = j.at("subject_markers_only").get<bool>();
    m.cfg.share_master_weights = j.at("share_master_weights").get<bool>();
    m.entity_types = j.at("entity_types").get<std::vector<std::string>>();
    m.relation_types = j.at("relation_types").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model: bad model.json field: " + std::string(e.what()));
  }
  m.vocab = Vocabulary::load((std::filesystem::path(dir) / "vocab.txt").string());
  m.store = ParameterStore::load((std::filesystem::path(dir) / "params.bin").string());
  return m;
}

int Model::entity_type_index(const std::string& name) const {
  auto it = std::find(entity_types.begin(), entity_types.end(), name);
  return it == entity_types.end() ? -1 : static_cast<int>(it - entity_types.begin());
}

int Model::relation_type_index(const std::string& name) const {
  auto it = std::find(relation_types.begin(), relation_types.end(), name);
  return it == relation_types.end() ? -1 : static_cast<int>(it - relation_types.begin());
}

std::vector<StreamRefs> Model::encode(Tape& tape, const std::vector<int>& token_ids) {
  TRef emb = embed(tape, store, token_ids);
  SrnConfig scfg{cfg.d_embed, cfg.d_hidden, cfg.share_master_weights};
  switch (cfg.encoder) {
    case EncoderKind::Srn:
      return encode_srn3(tape, store, "enc.", scfg, emb, Direction::Forward);
    case EncoderKind::BiSrn:
      return encode_srn3(tape, store, "enc.", scfg, emb, Direction::Bidirectional);
    case EncoderKind::BiLstm: {
      std::vector<TRef> hidden = encode_bilstm(tape, store, "enc.", scfg, emb);
      std::vector<StreamRefs> out(hidden.size());
      for (size_t t = 0; t < hidden.size(); ++t) out[t].fill(hidden[t]);
      return out;
    }
  }
  throw Error("encode: bad encoder kind");
}

namespace {

// Stacks one stream across tokens into an (n, w) block.
TRef stack_stream(Tape& tape, const std::vector<StreamRefs>& streams, int idx, int width) {
  if (streams.empty()) return tape.constant(Tensor::zeros({0, width}));
  std::vector<TRef> rows;
  rows.reserve(streams.size());
  for (const StreamRefs& s : streams) rows.push_back(s[static_cast<size_t>(idx)]);
  return tape.stack_rows(rows);
}

void assert_width(const Tape& tape, TRef rep, int expected, const char* what) {
  if (tape.value(rep).cols() != expected) {
    throw ShapeError(std::string(what) + " representation width " +
                     std::to_string(tape.value(rep).cols()) + " != expected " +
                     std::to_string(expected));
  }
}

}  // namespace

TRef Model::entity_rep(Tape& tape, const std::vector<StreamRefs>& streams) {
  int w = stream_width();
  TRef rep = tape.concat_cols(std::array<TRef, 4>{
      stack_stream(tape, streams, kE, w), stack_stream(tape, streams, kES, w),
      stack_stream(tape, streams, kEO, w), stack_stream(tape, streams, kESO, w)});
  assert_width(tape, rep, entity_rep_width(), "entity");
  return rep;
}

TRef Model::subject_rep(Tape& tape, const std::vector<StreamRefs>& streams,
                        const std::vector<int>* entity_tags) {
  int w = stream_width();
  TRef base = tape.concat_cols(std::array<TRef, 4>{
      stack_stream(tape, streams, kS, w), stack_stream(tape, streams, kES, w),
      stack_stream(tape, streams, kSO, w), stack_stream(tape, streams, kESO, w)});
  TRef rep;
  if (cfg.strategy == Strategy::Late) {
    if (entity_tags == nullptr || entity_tags->size() != streams.size()) {
      throw Error("subject_rep: late fusion requires one entity tag per token");
    }
    std::vector<int64_t> rows(entity_tags->begin(), entity_tags->end());
    TRef e_emb = tape.gather_rows(tape.param(store.at(kEntityTable)), rows);
    rep = tape.concat_cols(std::array<TRef, 2>{e_emb, base});
  } else {
    rep = base;
  }
  assert_width(tape, rep, subject_rep_width(), "subject");
  return rep;
}

TRef Model::object_rep(Tape& tape, const std::vector<StreamRefs>& streams,
                       const std::vector<int>* entity_tags,
                       const std::vector<int>* subject_tags) {
  int w = stream_width();
  TRef base = tape.concat_cols(std::array<TRef, 4>{
      stack_stream(tape, streams, kO, w), stack_stream(tape, streams, kEO, w),
      stack_stream(tape, streams, kSO, w), stack_stream(tape, streams, kESO, w)});
  TRef rep;
  if (cfg.strategy == Strategy::Late) {
    if (entity_tags == nullptr || subject_tags == nullptr ||
        entity_tags->size() != streams.size() || subject_tags->size() != streams.size()) {
      throw Error("object_rep: late fusion requires entity and subject tags per token");
    }
    std::vector<int64_t> erows(entity_tags->begin(), entity_tags->end());
    std::vector<int64_t> srows(subject_tags->begin(), subject_tags->end());
    TRef e_emb = tape.gather_rows(tape.param(store.at(kEntityTable)), erows);
    TRef s_emb = tape.gather_rows(tape.param(store.at(kSubjectTable)), srows);
    rep = tape.concat_cols(std::array<TRef, 3>{e_emb, base, s_emb});
  } else {
    rep = base;
  }
  assert_width(tape, rep, object_rep_width(), "object");
  return rep;
}

}  // namespace srx
