#pragma once

#include <array>
#include <string>
#include <vector>

#include "srx/data.hpp"

namespace srx {

// Strict micro-averaged scoring: an entity counts iff (start, end, type)
// matches gold exactly; a triple counts iff both argument spans, both
// argument entity types and the relation type all match.

struct Prf {
  int64_t tp = 0, fp = 0, fn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  double f1() const {
    double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

enum ErrorKind { kRTE = 0, kRNF, kETE, kENF, kRME, kESE, kErrorKindCount };
const char* error_kind_name(ErrorKind k);

using ErrorHistogram = std::array<int64_t, kErrorKindCount>;

// Per-sentence predictions as the evaluator sees them.
struct SentenceEval {
  std::vector<Entity> entities;
  std::vector<RelationTriple> triples;
};

struct EvalReport {
  Prf ner, re;
  Prf in_triple, out_of_triple;
  bool in_triple_defined = false;
  bool out_of_triple_defined = false;
  ErrorHistogram errors{};
  int64_t gold_entities = 0, pred_entities = 0;
  int64_t gold_triples = 0, pred_triples = 0;
};

// Gold triples materialized from index-based relations.
std::vector<RelationTriple> gold_triples(const AnnotatedSentence& s);

Prf ner_f1(const std::vector<AnnotatedSentence>& gold, const std::vector<SentenceEval>& pred);
Prf re_f1(const std::vector<AnnotatedSentence>& gold, const std::vector<SentenceEval>& pred);

// Gold entities are partitioned by membership in at least one gold triple.
// Predicted entities matching a gold entity inherit its partition;
// unmatched predictions are in-triple iff they appear in a predicted
// triple. A partition with no gold entities and no assigned predictions is
// reported as undefined.
struct TripleSplit {
  Prf in_triple, out_of_triple;
  bool in_defined = false, out_defined = false;
};
TripleSplit triple_split_report(const std::vector<AnnotatedSentence>& gold,
                                const std::vector<SentenceEval>& pred);

// Each erroneous predicted triple lands in exactly one of ESE > ETE > RME
// > RTE (checked in that order); each missed gold triple in ENF > RNF.
ErrorHistogram classify_relation_errors(const std::vector<AnnotatedSentence>& gold,
                                        const std::vector<SentenceEval>& pred);

EvalReport evaluate(const std::vector<AnnotatedSentence>& gold,
                    const std::vector<SentenceEval>& pred);

std::string report_to_json(const EvalReport& r);
std::string report_table(const EvalReport& r);
// Character-cell bar chart of the error histogram, with counts and
// proportions side by side.
std::string error_chart(const ErrorHistogram& h);

}  // namespace srx
