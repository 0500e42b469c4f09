#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "srx/cascade.hpp"
#include "srx/data.hpp"
#include "srx/model.hpp"
#include "srx/optim.hpp"
#include "srx/spanhead.hpp"

namespace srx {

// Per-task weighting of the start / end / match loss terms, each in [0, 1].
struct LossWeights {
  double alpha_e = 1.0, beta_e = 1.0, gamma_e = 1.0;
  double alpha_s = 1.0, beta_s = 1.0, gamma_s = 1.0;
  double alpha_o = 1.0, beta_o = 1.0, gamma_o = 1.0;
};

enum class TeacherMode { GoldenEntity, GoldenSubject };
std::string teacher_name(TeacherMode m);
TeacherMode teacher_from_name(const std::string& name);

struct TrainConfig {
  int batch_size = 8;
  double lr = 1e-3;  // desk-scale default; 1e-5 suits pretrained embedders
  int epochs = 100;
  int val_interval = 100;  // optimizer steps between validations
  double clip_norm = 1.0;
  TeacherMode teacher = TeacherMode::GoldenEntity;
  uint64_t seed = 1;
  LossWeights weights;

  void validate() const;
};

// Binary targets for one span-extraction instance.
struct SpanTargets {
  Tensor start, end, match;  // (n, K), (n, K), (n, n, K)
};
SpanTargets make_span_targets(int n, int labels,
                              const std::vector<std::tuple<int, int, int>>& spans);

// alpha * BCE(start) + beta * BCE(end) + gamma * BCE(match), summed over
// tokens, pairs and labels. mask holds one weight per token; pairs touching
// a masked token are excluded from the match term.
TRef span_loss(Tape& tape, const SpanScores& scores, const SpanTargets& targets, double alpha,
               double beta, double gamma, const std::vector<double>& mask);

TRef total_loss(Tape& tape, TRef entity_loss, TRef subject_loss, TRef object_loss);

// One teacher-forced span-extraction input: token ids (marked text for
// early fusion), tag sequences (late fusion) and gold spans in instance
// coordinates.
struct TaskInstance {
  std::vector<int> token_ids;
  std::vector<int> entity_tags, subject_tags;
  std::vector<std::tuple<int, int, int>> gold;  // (start, end, label)
};

struct SentenceInstances {
  TaskInstance ee, se;
  std::vector<TaskInstance> soe;  // one per candidate subject
  bool gold_only = true;          // teacher forcing marker
};

// Targets from gold annotations only. golden_entity emits one object
// instance per gold entity (non-subjects get all-zero targets, teaching
// rejection); golden_subject emits instances only for true subjects.
SentenceInstances build_training_targets(const AnnotatedSentence& sentence, Model& model,
                                         TeacherMode mode);

// Teacher-forced forward pass; returns the scalar loss node and counts the
// encoder invocations it spent.
TRef sentence_loss(Tape& tape, Model& model, const SentenceInstances& instances,
                   const LossWeights& weights, int64_t* encoder_invocations = nullptr);

struct LogEntry {
  int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  bool validation = false;
  double ner_f1 = 0.0, re_f1 = 0.0;
};

struct TrainResult {
  std::vector<LogEntry> log;
  int64_t best_step = -1;       // -1 when no validation ran
  double best_ner = 0.0, best_re = 0.0;
  int64_t steps = 0;
  int64_t pipeline_runs_during_training = 0;  // excludes validation
};

// Epochs of shuffled mini-batches with gradient accumulation, clipping and
// Adam. Every val_interval steps the full cascade runs on the dev split
// and the checkpoint maximizing NER F1 + RE F1 is retained (earlier
// snapshot wins ties); those parameters are restored into the model at the
// end. Aborts with a diagnostic on non-finite loss.
TrainResult train(Model& model, const std::vector<AnnotatedSentence>& train_split,
                  const std::vector<AnnotatedSentence>& dev_split, const TrainConfig& cfg);

std::string log_entry_to_json(const LogEntry& e);
void write_training_log(const std::vector<LogEntry>& log, const std::string& path);

// NER and RE micro-F1 of the cascade over a split.
std::pair<double, double> validate_model(Model& model,
                                         const std::vector<AnnotatedSentence>& split);

}  // namespace srx
