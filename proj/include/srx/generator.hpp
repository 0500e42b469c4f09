#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srx/data.hpp"

namespace srx {

// Templated corpus where every annotation is decidable from the surface by
// deterministic rules, so a from-scratch model can actually learn it:
//   - entity type comes from the mention's head-word inventory
//     ("s<k>w<i>" subject heads, "o<k>w<i>" object heads, type k);
//   - a mention is two tokens when the head is followed by a same-type
//     tail word "b<k>w<i>";
//   - a relation group reads  subject  v<r>  object [and object] , making
//     the trigger word v<r> carry the relation type;
//   - standalone mentions (no trigger) are out-of-triple; some are followed
//     by a decoy token u<r> that resembles a trigger but relates nothing,
//     and a few use subject-head words, so subjecthood is not purely
//     lexical;
//   - tail words occasionally appear as plain fillers, but never directly
//     after a same-type mention, keeping gold boundaries unambiguous.
struct GeneratorSpec {
  int filler_vocab = 20;  // filler word inventory ("vocabulary size")
  int entity_types = 4;
  int relation_types = 3;
  int len_min = 5, len_max = 12;
  int entities_min = 1, entities_max = 3;
  double out_of_triple_fraction = 0.25;
  uint64_t seed = 1;
  int train_size = 200, dev_size = 50, test_size = 50;

  // shape knobs for the template rules
  double two_token_entity_rate = 0.35;
  double multi_object_rate = 0.25;
  double decoy_rate = 0.3;
  double subject_ambiguity = 0.08;
  double tail_filler_rate = 0.12;

  void validate() const;
};

struct GeneratedCorpus {
  std::vector<std::string> entity_types;    // T0..T{K-1}
  std::vector<std::string> relation_types;  // R0..R{J-1}
  std::vector<AnnotatedSentence> train, dev, test;
};

// Fully seeded and reproducible; splits are disjoint in their exact token
// sequences. The realized out-of-triple fraction tracks the requested one
// through a running-deficit controller.
GeneratedCorpus generate_corpus(const GeneratorSpec& spec);

// Writes manifest.json plus the three split files under dir.
void write_corpus(const GeneratedCorpus& corpus, const std::string& dir);

}  // namespace srx
