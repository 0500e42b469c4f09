#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srx/embedder.hpp"
#include "srx/srn.hpp"
#include "srx/spanhead.hpp"
#include "srx/store.hpp"
#include "srx/vocab.hpp"

namespace srx {

enum class Strategy { Early, Late };
enum class EncoderKind { Srn, BiSrn, BiLstm };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
std::string encoder_name(EncoderKind e);
EncoderKind encoder_from_name(const std::string& name);

struct ModelConfig {
  int d_embed = 32;
  int d_hidden = 64;
  int d_type = 32;        // tag-embedding width for late fusion
  double threshold = 0.5; // span decoding threshold
  int max_span_len = 0;   // decoder cap; 0 = unrestricted
  Strategy strategy = Strategy::Late;
  EncoderKind encoder = EncoderKind::Srn;
  bool subject_markers_only = false;  // drop entity-information fusion
  bool share_master_weights = false;
};

inline constexpr const char* kEntityTable = "fusion.Te";
inline constexpr const char* kSubjectTable = "fusion.Ts";

// Everything a trained extractor carries: configuration, type inventories,
// vocabulary and parameters. Checkpoints are a directory holding
// params.bin, vocab.txt and model.json.
struct Model {
  ModelConfig cfg;
  std::vector<std::string> entity_types;
  std::vector<std::string> relation_types;
  Vocabulary vocab;
  ParameterStore store;
  int64_t pipeline_runs = 0;  // inference instrumentation

  static Model create(const ModelConfig& cfg, std::vector<std::string> entity_types,
                      std::vector<std::string> relation_types, Vocabulary vocab, uint64_t seed);

  void save(const std::string& dir) const;
  static Model load(const std::string& dir);

  int stream_width() const {
    return cfg.encoder == EncoderKind::Srn ? cfg.d_hidden : 2 * cfg.d_hidden;
  }
  int entity_rep_width() const { return 4 * stream_width(); }
  int subject_rep_width() const {
    return 4 * stream_width() + (cfg.strategy == Strategy::Late ? cfg.d_type : 0);
  }
  int object_rep_width() const {
    return 4 * stream_width() + (cfg.strategy == Strategy::Late ? 2 * cfg.d_type : 0);
  }
  int entity_labels() const { return static_cast<int>(entity_types.size()); }
  int relation_labels() const { return static_cast<int>(relation_types.size()); }
  int none_tag() const { return static_cast<int>(entity_types.size()); }

  int entity_type_index(const std::string& name) const;    // -1 when unknown
  int relation_type_index(const std::string& name) const;

  // One encoder invocation over a token-id sequence; returns the seven
  // stream refs per token (the BiLSTM ablation aliases all seven to its
  // hidden state).
  std::vector<StreamRefs> encode(Tape& tape, const std::vector<int>& token_ids);

  // Task representations, (n, width) with widths asserted.
  TRef entity_rep(Tape& tape, const std::vector<StreamRefs>& streams);
  TRef subject_rep(Tape& tape, const std::vector<StreamRefs>& streams,
                   const std::vector<int>* entity_tags);
  TRef object_rep(Tape& tape, const std::vector<StreamRefs>& streams,
                  const std::vector<int>* entity_tags, const std::vector<int>* subject_tags);
};

}  // namespace srx
