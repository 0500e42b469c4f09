#include "srx/generator.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "srx/common.hpp"
#include "srx/rng.hpp"

namespace srx {

namespace {

constexpr int kHeadsPerType = 8;
constexpr int kTailsPerType = 4;

struct WordBank {
  std::vector<std::string> fillers;
  std::vector<std::vector<std::string>> subject_heads, object_heads, tails;
  std::vector<std::string> triggers, decoys;
  std::string conj = "and";

  explicit WordBank(const GeneratorSpec& spec) {
    for (int i = 0; i < spec.filler_vocab; ++i) fillers.push_back("f" + std::to_string(i));
    for (int k = 0; k < spec.entity_types; ++k) {
      std::vector<std::string> s, o, b;
      for (int i = 0; i < kHeadsPerType; ++i) {
        s.push_back("s" + std::to_string(k) + "w" + std::to_string(i));
        o.push_back("o" + std::to_string(k) + "w" + std::to_string(i));
      }
      for (int i = 0; i < kTailsPerType; ++i) {
        b.push_back("b" + std::to_string(k) + "w" + std::to_string(i));
      }
      subject_heads.push_back(std::move(s));
      object_heads.push_back(std::move(o));
      tails.push_back(std::move(b));
    }
    for (int r = 0; r < spec.relation_types; ++r) {
      triggers.push_back("v" + std::to_string(r));
      decoys.push_back("u" + std::to_string(r));
    }
  }
};

// Steers the realized out-of-triple fraction toward the requested one.
struct FractionController {
  double target = 0.0;
  int64_t oot = 0, total = 0;

  bool want_standalone() const {
    if (total == 0) return target >= 0.5;
    return static_cast<double>(oot) / static_cast<double>(total) < target;
  }
  void account(bool standalone, int group_entities) {
    if (standalone) {
      oot += 1;
      total += 1;
    } else {
      total += group_entities;
    }
  }
  void merge(const FractionController& other) {
    oot += other.oot;
    total += other.total;
  }
};

struct Mention {
  std::vector<std::string> words;
  int type;
};

Mention make_mention(const GeneratorSpec& spec, const WordBank& bank, Rng& rng, bool subject_word) {
  Mention m;
  m.type = static_cast<int>(rng.below(spec.entity_types));
  const auto& heads = subject_word ? bank.subject_heads[static_cast<size_t>(m.type)]
                                   : bank.object_heads[static_cast<size_t>(m.type)];
  m.words.push_back(rng.pick(heads));
  if (rng.chance(spec.two_token_entity_rate)) {
    m.words.push_back(rng.pick(bank.tails[static_cast<size_t>(m.type)]));
  }
  return m;
}

struct Unit {
  // standalone: entities = {mention}; group: {subject, object...}
  bool standalone = true;
  std::vector<Mention> entities;
  int relation = -1;
  bool decoy = false;
  int token_cost() const {
    int cost = 0;
    for (const Mention& m : entities) cost += static_cast<int>(m.words.size());
    if (!standalone) cost += 1 + (static_cast<int>(entities.size()) > 2 ? 1 : 0);  // trigger, conj
    if (decoy) cost += 1;
    return cost;
  }
};

AnnotatedSentence assemble(const GeneratorSpec& spec, const WordBank& bank, Rng& rng,
                           const FractionController& global, FractionController& delta,
                           const std::vector<std::string>& entity_type_names,
                           const std::vector<std::string>& relation_type_names) {
  int target_len = static_cast<int>(rng.range(spec.len_min, spec.len_max));
  int budget = static_cast<int>(rng.range(spec.entities_min, spec.entities_max));

  FractionController local = global;
  std::vector<Unit> units;
  int cost = 0;
  int remaining = budget;
  int emitted = 0;
  while (remaining > 0) {
    Unit u;
    bool can_group = remaining >= 2 && spec.relation_types > 0;
    bool want_standalone = local.want_standalone();
    if (can_group && !want_standalone) {
      u.standalone = false;
      u.relation = static_cast<int>(rng.below(spec.relation_types));
      int n_objects = (remaining >= 3 && rng.chance(spec.multi_object_rate)) ? 2 : 1;
      u.entities.push_back(make_mention(spec, bank, rng, /*subject_word=*/true));
      for (int o = 0; o < n_objects; ++o) {
        u.entities.push_back(make_mention(spec, bank, rng, /*subject_word=*/false));
      }
    } else {
      // dropping leftover budget beats forcing an out-of-triple mention the
      // fraction controller does not want
      if (!want_standalone && emitted >= spec.entities_min) break;
      u.standalone = true;
      bool ambiguous = rng.chance(spec.subject_ambiguity);
      u.entities.push_back(make_mention(spec, bank, rng, ambiguous));
      u.decoy = spec.relation_types > 0 && rng.chance(spec.decoy_rate);
    }
    if (cost + u.token_cost() > spec.len_max) break;
    cost += u.token_cost();
    remaining -= static_cast<int>(u.entities.size());
    emitted += static_cast<int>(u.entities.size());
    local.account(u.standalone, static_cast<int>(u.entities.size()));
    delta.account(u.standalone, static_cast<int>(u.entities.size()));
    units.push_back(std::move(u));
  }

  // distribute filler tokens over the gaps around units
  int filler_budget = std::max(0, std::min(target_len, spec.len_max) - cost);
  std::vector<int> gap_fill(units.size() + 1, 0);
  for (int i = 0; i < filler_budget; ++i) {
    gap_fill[static_cast<size_t>(rng.below(static_cast<int64_t>(gap_fill.size())))] += 1;
  }

  AnnotatedSentence s;
  // tracks the entity type ending at the previous token, for the
  // tail-filler adjacency guard (-1 = none)
  int prev_entity_type = -1;
  auto emit_fillers = [&](int count) {
    for (int i = 0; i < count; ++i) {
      bool tail_filler = rng.chance(spec.tail_filler_rate);
      if (tail_filler) {
        int k = static_cast<int>(rng.below(spec.entity_types));
        if (k == prev_entity_type) k = (k + 1) % spec.entity_types;
        s.tokens.push_back(rng.pick(bank.tails[static_cast<size_t>(k)]));
      } else {
        s.tokens.push_back(rng.pick(bank.fillers));
      }
      prev_entity_type = -1;
    }
  };
  auto emit_mention = [&](const Mention& m) {
    int start = static_cast<int>(s.tokens.size());
    for (const std::string& w : m.words) s.tokens.push_back(w);
    int end = static_cast<int>(s.tokens.size()) - 1;
    s.entities.push_back({start, end, entity_type_names[static_cast<size_t>(m.type)]});
    prev_entity_type = m.type;
    return static_cast<int>(s.entities.size()) - 1;
  };

  for (size_t ui = 0; ui < units.size(); ++ui) {
    emit_fillers(gap_fill[ui]);
    const Unit& u = units[ui];
    if (u.standalone) {
      emit_mention(u.entities[0]);
      if (u.decoy) {
        s.tokens.push_back(rng.pick(bank.decoys));
        prev_entity_type = -1;
      }
    } else {
      int subject_idx = emit_mention(u.entities[0]);
      s.tokens.push_back(bank.triggers[static_cast<size_t>(u.relation)]);
      prev_entity_type = -1;
      for (size_t oi = 1; oi < u.entities.size(); ++oi) {
        if (oi > 1) {
          s.tokens.push_back(bank.conj);
          prev_entity_type = -1;
        }
        int object_idx = emit_mention(u.entities[oi]);
        s.relations.push_back(
            {subject_idx, object_idx, relation_type_names[static_cast<size_t>(u.relation)]});
      }
    }
  }
  emit_fillers(gap_fill[units.size()]);

  // honour the minimum length with trailing fillers
  while (static_cast<int>(s.tokens.size()) < spec.len_min) emit_fillers(1);
  return s;
}

}  // namespace

void GeneratorSpec::validate() const {
  if (filler_vocab < 1 || entity_types < 1 || relation_types < 0) {
    throw DataError("generator: filler_vocab and entity_types must be >= 1");
  }
  if (len_min < 1 || len_max < len_min || entities_min < 1 || entities_max < entities_min) {
    throw DataError("generator: empty length or entity-count range");
  }
  if (out_of_triple_fraction < 0.0 || out_of_triple_fraction > 1.0) {
    throw DataError("generator: out_of_triple_fraction must lie in [0, 1]");
  }
  if (train_size < 0 || dev_size < 0 || test_size < 0) {
    throw DataError("generator: split sizes must be non-negative");
  }
  // worst-case single mention costs 3 tokens (head, tail, decoy)
  if (3 > len_max) {
    throw DataError("generator: sentence length range cannot hold a single mention");
  }
  if (entities_min * 2 > len_max) {
    throw DataError("generator: entity count range exceeds the sentence length range");
  }
}

GeneratedCorpus generate_corpus(const GeneratorSpec& spec) {
  spec.validate();
  GeneratedCorpus corpus;
  for (int k = 0; k < spec.entity_types; ++k) corpus.entity_types.push_back("T" + std::to_string(k));
  for (int r = 0; r < spec.relation_types; ++r) {
    corpus.relation_types.push_back("R" + std::to_string(r));
  }

  WordBank bank(spec);
  Rng rng(spec.seed);
  FractionController controller{spec.out_of_triple_fraction};
  std::set<std::vector<std::string>> seen;

  auto fill_split = [&](std::vector<AnnotatedSentence>& split, int size) {
    for (int i = 0; i < size; ++i) {
      AnnotatedSentence s;
      FractionController delta{spec.out_of_triple_fraction};
      int attempts = 0;
      do {
        delta = FractionController{spec.out_of_triple_fraction};
        s = assemble(spec, bank, rng, controller, delta, corpus.entity_types,
                     corpus.relation_types);
        if (++attempts > 500) {
          throw DataError("generator: cannot produce enough distinct sentences; "
                          "enlarge the length range or vocabulary");
        }
      } while (seen.count(s.tokens) > 0);
      seen.insert(s.tokens);
      controller.merge(delta);  // rejected attempts never count
      split.push_back(std::move(s));
    }
  };
  fill_split(corpus.train, spec.train_size);
  fill_split(corpus.dev, spec.dev_size);
  fill_split(corpus.test, spec.test_size);
  return corpus;
}

void write_corpus(const GeneratedCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
  save_jsonl(corpus.train, path("train.jsonl"));
  save_jsonl(corpus.dev, path("dev.jsonl"));
  save_jsonl(corpus.test, path("test.jsonl"));
  DatasetManifest m;
  m.entity_types = corpus.entity_types;
  m.relation_types = corpus.relation_types;
  m.train_path = path("train.jsonl");
  m.dev_path = path("dev.jsonl");
  m.test_path = path("test.jsonl");
  save_manifest(m, path("manifest.json"));
}

}  // namespace srx
