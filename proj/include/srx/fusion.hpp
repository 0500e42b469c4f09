#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srx/vocab.hpp"

namespace srx {

// Typed token span in original-sentence coordinates (inclusive end).
// type indexes the dataset's entity-type inventory.
struct TypedSpan {
  int start = 0;
  int end = 0;
  int type = 0;
  double prob = 1.0;

  bool operator==(const TypedSpan&) const = default;
};

struct Span {
  int start = 0;
  int end = 0;

  bool operator==(const Span&) const = default;
};

struct MarkedToken {
  enum Kind { Word, EntityOpen, EntityClose, SubjectOpen, SubjectClose };
  std::string text;
  Kind kind = Word;
  int orig = -1;            // original index for words, -1 for markers
  int span_start = -1;      // marked span, original coordinates
  int span_end = -1;
};

// Sentence with inserted marker tokens and the index maps needed to move
// spans between marked and original coordinates.
struct MarkedSentence {
  std::vector<MarkedToken> tokens;
  std::vector<int> orig_to_marked;
  int original_length = 0;

  std::vector<std::string> surface() const;
  std::vector<std::string> stripped() const;

  // Projects a marked-coordinate span back; false when either boundary
  // lands on a marker token (marker positions are never span boundaries).
  bool to_original(int i, int j, int* out_i, int* out_j) const;
};

// Wraps each entity span in its type's open/close markers. For spans
// sharing a boundary, openers of longer spans come first and closers nest
// inside-out (longest closes last).
MarkedSentence insert_entity_markers(const std::vector<std::string>& tokens,
                                     const std::vector<TypedSpan>& entities,
                                     const std::vector<std::string>& entity_type_names);

// Wraps [S:S]/[S:E] around the subject, outside any entity markers the
// subject span covers. Subject coordinates are original-sentence ones.
MarkedSentence insert_subject_markers(const MarkedSentence& marked, Span subject);

// Per-token tag sequences for late fusion. Entity tag = type of the
// covering span (longest wins, then highest probability), or none_tag
// (= number of entity types) when uncovered. Subject tag is 1 inside the
// subject span, else 0.
std::pair<std::vector<int>, std::vector<int>> tag_tokens(
    int n_tokens, const std::vector<TypedSpan>& entities, const std::optional<Span>& subject,
    int none_tag);

}  // namespace srx
