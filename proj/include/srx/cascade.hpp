#pragma once

#include <string>
#include <vector>

#include "srx/data.hpp"
#include "srx/eval.hpp"
#include "srx/fusion.hpp"
#include "srx/model.hpp"

namespace srx {

// Three-turn inference: entity extraction on plain text, subject extraction
// with fused entity information, then per-subject object extraction per
// relation type. Early fusion re-embeds and re-encodes marked text (2 + S
// encoder invocations); late fusion encodes once and concatenates tag
// embeddings (1 invocation).
struct PipelineResult {
  std::vector<Entity> entities;  // typed, conflict-resolved
  std::vector<double> entity_probs;
  std::vector<RelationTriple> triples;
  int64_t encoder_invocations = 0;
};

PipelineResult run_pipeline(Model& model, const std::vector<std::string>& tokens);

SentenceEval to_eval(const PipelineResult& r);

// One JSON object per sentence: tokens, entities, triples and the encoder
// invocation count. Untyped triple arguments serialize with type "".
std::string prediction_to_json(const std::vector<std::string>& tokens, const PipelineResult& r);
// Parses the prediction format back for `analyze`.
SentenceEval prediction_from_json(const std::string& line, const std::string& where);

}  // namespace srx
