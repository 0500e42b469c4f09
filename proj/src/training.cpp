#include "srx/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "srx/common.hpp"
#include "srx/rng.hpp"

namespace srx {

std::string teacher_name(TeacherMode m) {
  return m == TeacherMode::GoldenEntity ? "golden_entity" : "golden_subject";
}

TeacherMode teacher_from_name(const std::string& name) {
  if (name == "golden_entity") return TeacherMode::GoldenEntity;
  if (name == "golden_subject") return TeacherMode::GoldenSubject;
  throw DataError("unknown teacher mode '" + name + "' (expected golden_entity|golden_subject)");
}

void TrainConfig::validate() const {
  if (batch_size <= 0 || epochs <= 0 || val_interval <= 0 || lr < 0.0 || !(clip_norm > 0.0)) {
    throw Error("train config: batch_size, epochs, val_interval and clip_norm must be positive");
  }
  for (double w : {weights.alpha_e, weights.beta_e, weights.gamma_e, weights.alpha_s,
                   weights.beta_s, weights.gamma_s, weights.alpha_o, weights.beta_o,
                   weights.gamma_o}) {
    if (w < 0.0 || w > 1.0) throw Error("train config: loss weights must lie in [0, 1]");
  }
}

SpanTargets make_span_targets(int n, int labels,
                              const std::vector<std::tuple<int, int, int>>& spans) {
  SpanTargets t;
  t.start = Tensor::zeros({n, labels});
  t.end = Tensor::zeros({n, labels});
  t.match = Tensor::zeros({n, n, labels});
  for (const auto& [i, j, k] : spans) {
    if (i < 0 || j < i || j >= n || k < 0 || k >= labels) {
      throw DataError("span target (" + std::to_string(i) + ", " + std::to_string(j) + ", " +
                      std::to_string(k) + ") out of range for n=" + std::to_string(n) +
                      " labels=" + std::to_string(labels));
    }
    t.start.data[static_cast<size_t>(i * labels + k)] = 1.0;
    t.end.data[static_cast<size_t>(j * labels + k)] = 1.0;
    t.match.data[static_cast<size_t>((i * n + j) * labels + k)] = 1.0;
  }
  return t;
}

TRef span_loss(Tape& tape, const SpanScores& scores, const SpanTargets& targets, double alpha,
               double beta, double gamma, const std::vector<double>& mask) {
  int n = scores.n, k = scores.labels;
  if (static_cast<int>(mask.size()) != n) {
    throw ShapeError("span_loss: mask size " + std::to_string(mask.size()) + " != tokens " +
                     std::to_string(n));
  }
  Tensor token_w = Tensor::zeros({n, k});
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) token_w.data[static_cast<size_t>(i * k + c)] = mask[static_cast<size_t>(i)];
  }
  Tensor pair_w = Tensor::zeros({n, n, k});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double w = mask[static_cast<size_t>(i)] * mask[static_cast<size_t>(j)];
      for (int c = 0; c < k; ++c) pair_w.data[static_cast<size_t>((i * n + j) * k + c)] = w;
    }
  }
  TRef l_start = tape.scale(tape.bce_sum(scores.start, targets.start, token_w), alpha);
  TRef l_end = tape.scale(tape.bce_sum(scores.end, targets.end, std::move(token_w)), beta);
  TRef l_match = tape.scale(tape.bce_sum(scores.match, targets.match, std::move(pair_w)), gamma);
  return tape.add(tape.add(l_start, l_end), l_match);
}

TRef total_loss(Tape& tape, TRef entity_loss, TRef subject_loss, TRef object_loss) {
  return tape.add(tape.add(entity_loss, subject_loss), object_loss);
}

SentenceInstances build_training_targets(const AnnotatedSentence& sentence, Model& model,
                                         TeacherMode mode) {
  const int n = static_cast<int>(sentence.tokens.size());
  SentenceInstances out;

  std::vector<TypedSpan> gold_entities;
  for (const Entity& e : sentence.entities) {
    int type = model.entity_type_index(e.type);
    if (type < 0) throw DataError("training: entity type '" + e.type + "' not in inventory");
    gold_entities.push_back({e.start, e.end, type, 1.0});
  }

  // EE always reads the plain sentence
  out.ee.token_ids = model.vocab.encode(sentence.tokens);
  for (const TypedSpan& e : gold_entities) out.ee.gold.emplace_back(e.start, e.end, e.type);

  // subjects = entities heading at least one relation
  std::set<int> subject_indices;
  for (const Relation& r : sentence.relations) subject_indices.insert(r.subject);

  const std::vector<TypedSpan> fused =
      model.cfg.subject_markers_only ? std::vector<TypedSpan>{} : gold_entities;

  const bool early = model.cfg.strategy == Strategy::Early;
  MarkedSentence text_star;
  if (early) {
    text_star = insert_entity_markers(sentence.tokens, fused, model.entity_types);
    out.se.token_ids = model.vocab.encode(text_star.surface());
    for (int idx : subject_indices) {
      const Entity& e = sentence.entities[static_cast<size_t>(idx)];
      out.se.gold.emplace_back(text_star.orig_to_marked[static_cast<size_t>(e.start)],
                               text_star.orig_to_marked[static_cast<size_t>(e.end)], 0);
    }
  } else {
    out.se.token_ids = out.ee.token_ids;
    auto [etags, unused] = tag_tokens(n, fused, std::nullopt, model.none_tag());
    out.se.entity_tags = etags;
    for (int idx : subject_indices) {
      const Entity& e = sentence.entities[static_cast<size_t>(idx)];
      out.se.gold.emplace_back(e.start, e.end, 0);
    }
  }

  // candidate subjects: every gold entity, or only true subjects
  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(sentence.entities.size()); ++i) {
    if (mode == TeacherMode::GoldenEntity || subject_indices.count(i) > 0) candidates.push_back(i);
  }

  for (int cand : candidates) {
    const Entity& subj = sentence.entities[static_cast<size_t>(cand)];
    TaskInstance inst;
    std::vector<std::tuple<int, int, int>> objects;  // original coordinates
    for (const Relation& r : sentence.relations) {
      if (r.subject != cand) continue;
      int rel = model.relation_type_index(r.type);
      if (rel < 0) throw DataError("training: relation type '" + r.type + "' not in inventory");
      const Entity& obj = sentence.entities[static_cast<size_t>(r.object)];
      objects.emplace_back(obj.start, obj.end, rel);
    }
    if (early) {
      MarkedSentence text_2star = insert_subject_markers(text_star, {subj.start, subj.end});
      inst.token_ids = model.vocab.encode(text_2star.surface());
      for (const auto& [i, j, k] : objects) {
        inst.gold.emplace_back(text_2star.orig_to_marked[static_cast<size_t>(i)],
                               text_2star.orig_to_marked[static_cast<size_t>(j)], k);
      }
    } else {
      inst.token_ids = out.ee.token_ids;
      auto [etags, stags] = tag_tokens(n, fused, Span{subj.start, subj.end}, model.none_tag());
      inst.entity_tags = etags;
      inst.subject_tags = stags;
      inst.gold = objects;
    }
    out.soe.push_back(std::move(inst));
  }
  return out;
}

namespace {

std::vector<double> ones(size_t n) { return std::vector<double>(n, 1.0); }

}  // namespace

TRef sentence_loss(Tape& tape, Model& model, const SentenceInstances& instances,
                   const LossWeights& w, int64_t* encoder_invocations) {
  if (!instances.gold_only) {
    throw Error("sentence_loss: training inputs must be teacher-forced gold annotations");
  }
  int64_t invocations = 0;
  const bool early = model.cfg.strategy == Strategy::Early;

  TRef l_e, l_s, l_o;
  if (early) {
    auto run = [&](const TaskInstance& inst, const char* head, int labels, double a, double b,
                   double g, TRef (Model::*rep_fn)(Tape&, const std::vector<StreamRefs>&)) {
      std::vector<StreamRefs> streams = model.encode(tape, inst.token_ids);
      ++invocations;
      TRef rep = (model.*rep_fn)(tape, streams);
      SpanScores scores = span_score(tape, model.store, head, rep, labels);
      int n = static_cast<int>(inst.token_ids.size());
      return span_loss(tape, scores, make_span_targets(n, labels, inst.gold), a, b, g,
                       ones(static_cast<size_t>(n)));
    };
    l_e = run(instances.ee, "head.e.", model.entity_labels(), w.alpha_e, w.beta_e, w.gamma_e,
              &Model::entity_rep);
    // subject / object reps need tag arguments; inline the two calls
    {
      std::vector<StreamRefs> streams = model.encode(tape, instances.se.token_ids);
      ++invocations;
      TRef rep = model.subject_rep(tape, streams, nullptr);
      SpanScores scores = span_score(tape, model.store, "head.s.", rep, 1);
      int n = static_cast<int>(instances.se.token_ids.size());
      l_s = span_loss(tape, scores, make_span_targets(n, 1, instances.se.gold), w.alpha_s,
                      w.beta_s, w.gamma_s, ones(static_cast<size_t>(n)));
    }
    l_o = tape.constant(Tensor::scalar(0.0));
    for (const TaskInstance& inst : instances.soe) {
      std::vector<StreamRefs> streams = model.encode(tape, inst.token_ids);
      ++invocations;
      TRef rep = model.object_rep(tape, streams, nullptr, nullptr);
      SpanScores scores = span_score(tape, model.store, "head.o.", rep, model.relation_labels());
      int n = static_cast<int>(inst.token_ids.size());
      l_o = tape.add(l_o, span_loss(tape, scores,
                                    make_span_targets(n, model.relation_labels(), inst.gold),
                                    w.alpha_o, w.beta_o, w.gamma_o, ones(static_cast<size_t>(n))));
    }
  } else {
    // late fusion: one encoding serves every task of the sentence
    std::vector<StreamRefs> streams = model.encode(tape, instances.ee.token_ids);
    ++invocations;
    int n = static_cast<int>(instances.ee.token_ids.size());
    auto mask = ones(static_cast<size_t>(n));

    SpanScores ee_scores = span_score(tape, model.store, "head.e.",
                                      model.entity_rep(tape, streams), model.entity_labels());
    l_e = span_loss(tape, ee_scores, make_span_targets(n, model.entity_labels(), instances.ee.gold),
                    w.alpha_e, w.beta_e, w.gamma_e, mask);

    SpanScores se_scores = span_score(
        tape, model.store, "head.s.", model.subject_rep(tape, streams, &instances.se.entity_tags),
        1);
    l_s = span_loss(tape, se_scores, make_span_targets(n, 1, instances.se.gold), w.alpha_s,
                    w.beta_s, w.gamma_s, mask);

    l_o = tape.constant(Tensor::scalar(0.0));
    for (const TaskInstance& inst : instances.soe) {
      SpanScores scores = span_score(
          tape, model.store, "head.o.",
          model.object_rep(tape, streams, &inst.entity_tags, &inst.subject_tags),
          model.relation_labels());
      l_o = tape.add(l_o, span_loss(tape, scores,
                                    make_span_targets(n, model.relation_labels(), inst.gold),
                                    w.alpha_o, w.beta_o, w.gamma_o, mask));
    }
  }
  if (encoder_invocations != nullptr) *encoder_invocations += invocations;
  return total_loss(tape, l_e, l_s, l_o);
}

std::pair<double, double> validate_model(Model& model,
                                         const std::vector<AnnotatedSentence>& split) {
  std::vector<SentenceEval> preds;
  preds.reserve(split.size());
  for (const AnnotatedSentence& s : split) preds.push_back(to_eval(run_pipeline(model, s.tokens)));
  return {ner_f1(split, preds).f1(), re_f1(split, preds).f1()};
}

TrainResult train(Model& model, const std::vector<AnnotatedSentence>& train_split,
                  const std::vector<AnnotatedSentence>& dev_split, const TrainConfig& cfg) {
  cfg.validate();
  if (train_split.empty()) throw Error("train: empty training split");

  Rng rng(cfg.seed);
  AdamOptimizer opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  TrainResult result;
  model.store.zero_grads();

  std::vector<std::pair<std::string, Tensor>> best_snapshot;
  double best_sum = -1.0;
  int64_t pipeline_runs_at_start = model.pipeline_runs;
  int64_t validation_runs = 0;

  std::vector<size_t> order(train_split.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg.batch_size)) {
      size_t batch_end = std::min(order.size(), pos + static_cast<size_t>(cfg.batch_size));
      double batch_loss = 0.0;
      for (size_t b = pos; b < batch_end; ++b) {
        const AnnotatedSentence& sentence = train_split[order[b]];
        SentenceInstances instances = build_training_targets(sentence, model, cfg.teacher);
        Tape tape;
        TRef loss = sentence_loss(tape, model, instances, cfg.weights);
        double value = tape.scalar_value(loss);
        if (!std::isfinite(value)) {
          throw NumericError("train: non-finite loss at step " + std::to_string(result.steps + 1) +
                             " (epoch " + std::to_string(epoch) + ")");
        }
        batch_loss += value;
        tape.backward(loss);
      }
      double inv_count = 1.0 / static_cast<double>(batch_end - pos);
      scale_gradients(model.store, inv_count);
      clip_gradients(model.store, cfg.clip_norm);
      opt.step(model.store);
      result.steps += 1;

      LogEntry entry;
      entry.step = result.steps;
      entry.epoch = epoch;
      entry.loss = batch_loss * inv_count;
      if (!dev_split.empty() && result.steps % cfg.val_interval == 0) {
        auto [nf1, rf1] = validate_model(model, dev_split);
        ++validation_runs;
        entry.validation = true;
        entry.ner_f1 = nf1;
        entry.re_f1 = rf1;
        if (nf1 + rf1 > best_sum) {
          best_sum = nf1 + rf1;
          best_snapshot = model.store.snapshot_values();
          result.best_step = result.steps;
          result.best_ner = nf1;
          result.best_re = rf1;
        }
      }
      result.log.push_back(entry);
    }
  }

  result.pipeline_runs_during_training =
      model.pipeline_runs - pipeline_runs_at_start -
      validation_runs * static_cast<int64_t>(dev_split.size());
  if (!best_snapshot.empty()) model.store.restore_values(best_snapshot);
  return result;
}

std::string log_entry_to_json(const LogEntry& e) {
  nlohmann::json j;
  j["step"] = e.step;
  j["epoch"] = e.epoch;
  j["loss"] = e.loss;
  if (e.validation) {
    j["ner_f1"] = e.ner_f1;
    j["re_f1"] = e.re_f1;
  }
  return j.dump();
}

void write_training_log(const std::vector<LogEntry>& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (const LogEntry& e : log) out << log_entry_to_json(e) << "\n";
}

}  // namespace srx
