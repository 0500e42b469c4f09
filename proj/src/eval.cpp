#include "srx/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "srx/common.hpp"

namespace srx {

namespace {

using EntityKey = std::tuple<int, int, std::string>;
using SpanKey = std::pair<int, int>;
using TripleKey = std::tuple<int, int, std::string, int, int, std::string, std::string>;
using PairKey = std::tuple<int, int, int, int>;

EntityKey entity_key(const Entity& e) { return {e.start, e.end, e.type}; }

TripleKey triple_key(const RelationTriple& t) {
  return {t.subject.start, t.subject.end, t.subject.type,
          t.object.start,  t.object.end,  t.object.type,  t.relation};
}

PairKey pair_key(const RelationTriple& t) {
  return {t.subject.start, t.subject.end, t.object.start, t.object.end};
}

std::set<EntityKey> entity_set(const std::vector<Entity>& entities) {
  std::set<EntityKey> out;
  for (const Entity& e : entities) out.insert(entity_key(e));
  return out;
}

std::vector<RelationTriple> dedup_triples(const std::vector<RelationTriple>& triples) {
  std::set<TripleKey> seen;
  std::vector<RelationTriple> out;
  for (const RelationTriple& t : triples) {
    if (seen.insert(triple_key(t)).second) out.push_back(t);
  }
  return out;
}

void check_sizes(const std::vector<AnnotatedSentence>& gold,
                 const std::vector<SentenceEval>& pred) {
  if (gold.size() != pred.size()) {
    throw Error("evaluate: gold has " + std::to_string(gold.size()) + " sentences, predictions " +
                std::to_string(pred.size()));
  }
}

}  // namespace

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case kRTE: return "RTE";
    case kRNF: return "RNF";
    case kETE: return "ETE";
    case kENF: return "ENF";
    case kRME: return "RME";
    case kESE: return "ESE";
    default: return "?";
  }
}

std::vector<RelationTriple> gold_triples(const AnnotatedSentence& s) {
  std::vector<RelationTriple> out;
  for (const Relation& r : s.relations) {
    RelationTriple t;
    t.subject = s.entities[static_cast<size_t>(r.subject)];
    t.object = s.entities[static_cast<size_t>(r.object)];
    t.relation = r.type;
    out.push_back(std::move(t));
  }
  return dedup_triples(out);
}

Prf ner_f1(const std::vector<AnnotatedSentence>& gold, const std::vector<SentenceEval>& pred) {
  check_sizes(gold, pred);
  Prf prf;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::set<EntityKey> g = entity_set(gold[i].entities);
    std::set<EntityKey> p = entity_set(pred[i].entities);
    for (const EntityKey& k : p) {
      if (g.count(k)) ++prf.tp;
      else ++prf.fp;
    }
    for (const EntityKey& k : g) {
      if (!p.count(k)) ++prf.fn;
    }
  }
  return prf;
}

Prf re_f1(const std::vector<AnnotatedSentence>& gold, const std::vector<SentenceEval>& pred) {
  check_sizes(gold, pred);
  Prf prf;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::set<TripleKey> g;
    for (const RelationTriple& t : gold_triples(gold[i])) g.insert(triple_key(t));
    std::set<TripleKey> p;
    for (const RelationTriple& t : dedup_triples(pred[i].triples)) p.insert(triple_key(t));
    for (const TripleKey& k : p) {
      if (g.count(k)) ++prf.tp;
      else ++prf.fp;
    }
    for (const TripleKey& k : g) {
      if (!p.count(k)) ++prf.fn;
    }
  }
  return prf;
}

TripleSplit triple_split_report(const std::vector<AnnotatedSentence>& gold,
                                const std::vector<SentenceEval>& pred) {
  check_sizes(gold, pred);
  TripleSplit split;
  int64_t assigned_in = 0, assigned_out = 0, gold_in = 0, gold_out = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    const AnnotatedSentence& s = gold[i];
    // gold-side partition by relation participation, keyed on (span, type)
    std::set<EntityKey> in_triple_gold;
    for (const Relation& r : s.relations) {
      in_triple_gold.insert(entity_key(s.entities[static_cast<size_t>(r.subject)]));
      in_triple_gold.insert(entity_key(s.entities[static_cast<size_t>(r.object)]));
    }
    std::set<EntityKey> g = entity_set(s.entities);
    std::set<EntityKey> p = entity_set(pred[i].entities);
    std::set<EntityKey> pred_triple_args;
    for (const RelationTriple& t : pred[i].triples) {
      pred_triple_args.insert(entity_key(t.subject));
      pred_triple_args.insert(entity_key(t.object));
    }

    for (const EntityKey& k : g) {
      bool in = in_triple_gold.count(k) > 0;
      (in ? gold_in : gold_out) += 1;
      Prf& part = in ? split.in_triple : split.out_of_triple;
      if (p.count(k)) ++part.tp;
      else ++part.fn;
    }
    for (const EntityKey& k : p) {
      bool in;
      if (g.count(k)) {
        in = in_triple_gold.count(k) > 0;
      } else {
        in = pred_triple_args.count(k) > 0;  // unmatched: mirror the gold rule
      }
      (in ? assigned_in : assigned_out) += 1;
      if (!g.count(k)) {
        Prf& part = in ? split.in_triple : split.out_of_triple;
        ++part.fp;
      }
    }
  }
  split.in_defined = gold_in > 0 || assigned_in > 0;
  split.out_defined = gold_out > 0 || assigned_out > 0;
  return split;
}

ErrorHistogram classify_relation_errors(const std::vector<AnnotatedSentence>& gold,
                                        const std::vector<SentenceEval>& pred) {
  check_sizes(gold, pred);
  ErrorHistogram hist{};
  for (size_t i = 0; i < gold.size(); ++i) {
    const AnnotatedSentence& s = gold[i];
    std::set<SpanKey> gold_spans;
    std::map<SpanKey, std::string> gold_span_type;
    for (const Entity& e : s.entities) {
      SpanKey k{e.start, e.end};
      gold_spans.insert(k);
      gold_span_type.emplace(k, e.type);
    }
    std::vector<RelationTriple> gt = gold_triples(s);
    std::set<TripleKey> gold_keys;
    std::set<PairKey> gold_pairs;
    for (const RelationTriple& t : gt) {
      gold_keys.insert(triple_key(t));
      gold_pairs.insert(pair_key(t));
    }
    std::set<EntityKey> pred_entities = entity_set(pred[i].entities);
    std::set<TripleKey> pred_keys;
    for (const RelationTriple& t : dedup_triples(pred[i].triples)) {
      pred_keys.insert(triple_key(t));
      if (gold_keys.count(triple_key(t))) continue;  // correct triple

      SpanKey ss{t.subject.start, t.subject.end};
      SpanKey os{t.object.start, t.object.end};
      if (!gold_spans.count(ss) || !gold_spans.count(os)) {
        ++hist[kESE];
      } else if (gold_span_type.at(ss) != t.subject.type ||
                 gold_span_type.at(os) != t.object.type) {
        ++hist[kETE];
      } else if (!gold_pairs.count(pair_key(t))) {
        ++hist[kRME];
      } else {
        ++hist[kRTE];
      }
    }
    for (const RelationTriple& t : gt) {
      if (pred_keys.count(triple_key(t))) continue;  // found
      if (!pred_entities.count(entity_key(t.subject)) ||
          !pred_entities.count(entity_key(t.object))) {
        ++hist[kENF];
      } else {
        ++hist[kRNF];
      }
    }
  }
  return hist;
}

EvalReport evaluate(const std::vector<AnnotatedSentence>& gold,
                    const std::vector<SentenceEval>& pred) {
  EvalReport r;
  r.ner = ner_f1(gold, pred);
  r.re = re_f1(gold, pred);
  TripleSplit split = triple_split_report(gold, pred);
  r.in_triple = split.in_triple;
  r.out_of_triple = split.out_of_triple;
  r.in_triple_defined = split.in_defined;
  r.out_of_triple_defined = split.out_defined;
  r.errors = classify_relation_errors(gold, pred);
  for (size_t i = 0; i < gold.size(); ++i) {
    r.gold_entities += static_cast<int64_t>(entity_set(gold[i].entities).size());
    r.pred_entities += static_cast<int64_t>(entity_set(pred[i].entities).size());
    r.gold_triples += static_cast<int64_t>(gold_triples(gold[i]).size());
    r.pred_triples += static_cast<int64_t>(dedup_triples(pred[i].triples).size());
  }
  return r;
}

namespace {

nlohmann::json prf_json(const Prf& p) {
  return {{"precision", p.precision()}, {"recall", p.recall()}, {"f1", p.f1()},
          {"tp", p.tp},                 {"fp", p.fp},           {"fn", p.fn}};
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["ner"] = prf_json(r.ner);
  j["re"] = prf_json(r.re);
  j["in_triple"] = r.in_triple_defined ? prf_json(r.in_triple) : nlohmann::json(nullptr);
  j["out_of_triple"] = r.out_of_triple_defined ? prf_json(r.out_of_triple) : nlohmann::json(nullptr);
  nlohmann::json errors;
  for (int k = 0; k < kErrorKindCount; ++k) {
    errors[error_kind_name(static_cast<ErrorKind>(k))] = r.errors[static_cast<size_t>(k)];
  }
  j["errors"] = errors;
  j["counts"] = {{"gold_entities", r.gold_entities},
                 {"pred_entities", r.pred_entities},
                 {"gold_triples", r.gold_triples},
                 {"pred_triples", r.pred_triples}};
  return j.dump(2);
}

std::string report_table(const EvalReport& r) {
  char buf[256];
  std::string out;
  out += "metric            P       R       F1      TP      FP      FN\n";
  auto row = [&](const char* name, const Prf& p, bool defined) {
    if (!defined) {
      std::snprintf(buf, sizeof(buf), "%-14s %s\n", name, "N/A");
      out += buf;
      return;
    }
    std::snprintf(buf, sizeof(buf), "%-14s %7.4f %7.4f %7.4f %7lld %7lld %7lld\n", name,
                  p.precision(), p.recall(), p.f1(), static_cast<long long>(p.tp),
                  static_cast<long long>(p.fp), static_cast<long long>(p.fn));
    out += buf;
  };
  row("ner", r.ner, true);
  row("re", r.re, true);
  row("in-triple", r.in_triple, r.in_triple_defined);
  row("out-of-triple", r.out_of_triple, r.out_of_triple_defined);
  return out;
}

std::string error_chart(const ErrorHistogram& h) {
  int64_t total = 0, max_count = 1;
  for (int64_t c : h) {
    total += c;
    max_count = std::max(max_count, c);
  }
  std::string out;
  char buf[160];
  for (int k = 0; k < kErrorKindCount; ++k) {
    int64_t c = h[static_cast<size_t>(k)];
    int bar = static_cast<int>((40 * c) / max_count);
    double frac = total == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(total);
    std::snprintf(buf, sizeof(buf), "%-4s |%-40s %6lld  %5.1f%%\n",
                  error_kind_name(static_cast<ErrorKind>(k)), std::string(static_cast<size_t>(bar), '#').c_str(),
                  static_cast<long long>(c), 100.0 * frac);
    out += buf;
  }
  return out;
}

}  // namespace srx
