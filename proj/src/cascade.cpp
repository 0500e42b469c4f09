#include "srx/cascade.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "srx/common.hpp"

namespace srx {

namespace {

struct TypedLookup {
  std::map<std::pair<int, int>, std::pair<std::string, double>> by_span;

  Entity typed(const Span& s) const {
    Entity e;
    e.start = s.start;
    e.end = s.end;
    auto it = by_span.find({s.start, s.end});
    e.type = it == by_span.end() ? "" : it->second.first;
    return e;
  }
};

std::vector<SpanPrediction> decode_head(Tape& tape, Model& model, const std::string& prefix,
                                        TRef rep, int labels) {
  SpanScores scores = span_score(tape, model.store, prefix, rep, labels);
  return decode_spans(extract_probs(tape, scores), model.cfg.threshold, model.cfg.max_span_len);
}

}  // namespace

PipelineResult run_pipeline(Model& model, const std::vector<std::string>& tokens) {
  model.pipeline_runs += 1;
  PipelineResult result;
  const int n = static_cast<int>(tokens.size());

  // --- entity extraction on the plain sentence ---
  Tape tape;
  std::vector<int> plain_ids = model.vocab.encode(tokens);
  std::vector<StreamRefs> plain_streams = model.encode(tape, plain_ids);
  result.encoder_invocations += 1;

  std::vector<SpanPrediction> raw_entities =
      decode_head(tape, model, "head.e.", model.entity_rep(tape, plain_streams),
                  model.entity_labels());
  std::vector<SpanPrediction> entities = resolve_type_conflicts(raw_entities);

  std::vector<TypedSpan> entity_spans;
  TypedLookup lookup;
  for (const SpanPrediction& p : entities) {
    entity_spans.push_back({p.start, p.end, p.label, p.prob});
    result.entities.push_back({p.start, p.end, model.entity_types[static_cast<size_t>(p.label)]});
    result.entity_probs.push_back(p.prob);
    lookup.by_span[{p.start, p.end}] = {model.entity_types[static_cast<size_t>(p.label)], p.prob};
  }

  // Fused entity information; the subject-markers-only ablation is exactly
  // fusing an empty entity set.
  const std::vector<TypedSpan> fused_entities =
      model.cfg.subject_markers_only ? std::vector<TypedSpan>{} : entity_spans;

  // --- subject extraction ---
  std::vector<Span> subjects;
  if (model.cfg.strategy == Strategy::Early) {
    MarkedSentence text_star = insert_entity_markers(tokens, fused_entities, model.entity_types);
    Tape se_tape;
    std::vector<StreamRefs> se_streams =
        model.encode(se_tape, model.vocab.encode(text_star.surface()));
    result.encoder_invocations += 1;
    std::vector<SpanPrediction> marked_subjects =
        decode_head(se_tape, model, "head.s.", model.subject_rep(se_tape, se_streams, nullptr), 1);
    for (const SpanPrediction& p : marked_subjects) {
      int oi = 0, oj = 0;
      if (text_star.to_original(p.start, p.end, &oi, &oj)) subjects.push_back({oi, oj});
    }

    if (result.entities.empty()) {
      // no entities, hence nothing can be a subject
      return result;
    }

    // --- subject-oriented object extraction, one encoding per subject ---
    for (const Span& subj : subjects) {
      MarkedSentence text_2star = insert_subject_markers(text_star, subj);
      Tape oe_tape;
      std::vector<StreamRefs> oe_streams =
          model.encode(oe_tape, model.vocab.encode(text_2star.surface()));
      result.encoder_invocations += 1;
      std::vector<SpanPrediction> objects = decode_head(
          oe_tape, model, "head.o.", model.object_rep(oe_tape, oe_streams, nullptr, nullptr),
          model.relation_labels());
      for (const SpanPrediction& p : objects) {
        int oi = 0, oj = 0;
        if (!text_2star.to_original(p.start, p.end, &oi, &oj)) continue;
        RelationTriple t;
        t.subject = lookup.typed(subj);
        t.object = lookup.typed({oi, oj});
        t.relation = model.relation_types[static_cast<size_t>(p.label)];
        t.prob = p.prob;
        result.triples.push_back(std::move(t));
      }
    }
  } else {
    auto [entity_tags, no_subject] =
        tag_tokens(n, fused_entities, std::nullopt, model.none_tag());
    std::vector<SpanPrediction> subject_preds = decode_head(
        tape, model, "head.s.", model.subject_rep(tape, plain_streams, &entity_tags), 1);
    for (const SpanPrediction& p : subject_preds) subjects.push_back({p.start, p.end});

    if (result.entities.empty()) return result;

    for (const Span& subj : subjects) {
      auto [etags, stags] = tag_tokens(n, fused_entities, subj, model.none_tag());
      std::vector<SpanPrediction> objects = decode_head(
          tape, model, "head.o.", model.object_rep(tape, plain_streams, &etags, &stags),
          model.relation_labels());
      for (const SpanPrediction& p : objects) {
        RelationTriple t;
        t.subject = lookup.typed(subj);
        t.object = lookup.typed({p.start, p.end});
        t.relation = model.relation_types[static_cast<size_t>(p.label)];
        t.prob = p.prob;
        result.triples.push_back(std::move(t));
      }
    }
  }

  // exact-duplicate removal
  std::set<std::tuple<int, int, std::string, int, int, std::string, std::string>> seen;
  std::vector<RelationTriple> unique;
  for (RelationTriple& t : result.triples) {
    if (seen.insert({t.subject.start, t.subject.end, t.subject.type, t.object.start, t.object.end,
                     t.object.type, t.relation})
            .second) {
      unique.push_back(std::move(t));
    }
  }
  result.triples = std::move(unique);
  return result;
}

SentenceEval to_eval(const PipelineResult& r) {
  SentenceEval e;
  e.entities = r.entities;
  e.triples = r.triples;
  return e;
}

namespace {

nlohmann::json entity_json(const Entity& e, double prob) {
  return {{"start", e.start}, {"end", e.end}, {"type", e.type}, {"prob", prob}};
}

nlohmann::json arg_json(const Entity& e) {
  return {{"start", e.start}, {"end", e.end}, {"type", e.type}};
}

}  // namespace

std::string prediction_to_json(const std::vector<std::string>& tokens, const PipelineResult& r) {
  nlohmann::json j;
  j["tokens"] = tokens;
  j["entities"] = nlohmann::json::array();
  for (size_t i = 0; i < r.entities.size(); ++i) {
    j["entities"].push_back(entity_json(r.entities[i], r.entity_probs[i]));
  }
  j["triples"] = nlohmann::json::array();
  for (const RelationTriple& t : r.triples) {
    j["triples"].push_back({{"subj", arg_json(t.subject)},
                            {"obj", arg_json(t.object)},
                            {"relation", t.relation},
                            {"prob", t.prob}});
  }
  j["encoder_invocations"] = r.encoder_invocations;
  return j.dump();
}

SentenceEval prediction_from_json(const std::string& line, const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": JSON parse error: " + e.what());
  }
  SentenceEval out;
  try {
    for (const auto& je : j.value("entities", nlohmann::json::array())) {
      out.entities.push_back({je.at("start").get<int>(), je.at("end").get<int>(),
                              je.at("type").get<std::string>()});
    }
    for (const auto& jt : j.value("triples", nlohmann::json::array())) {
      RelationTriple t;
      t.subject = {jt.at("subj").at("start").get<int>(), jt.at("subj").at("end").get<int>(),
                   jt.at("subj").at("type").get<std::string>()};
      t.object = {jt.at("obj").at("start").get<int>(), jt.at("obj").at("end").get<int>(),
                  jt.at("obj").at("type").get<std::string>()};
      t.relation = jt.at("relation").get<std::string>();
      t.prob = jt.value("prob", 1.0);
      out.triples.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": bad prediction record: " + e.what());
  }
  return out;
}

}  // namespace srx
