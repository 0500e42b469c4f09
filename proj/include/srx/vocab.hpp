#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "srx/data.hpp"

namespace srx {

// Token inventory with dense indices. Indices 0..R-1 are reserved:
// PAD, UNK, the subject markers [S:S]/[S:E], then an open/close marker
// pair per entity type, in manifest order. Corpus tokens follow, ordered
// by frequency (descending) then lexicographically.
class Vocabulary {
 public:
  static constexpr const char* kPad = "<pad>";
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kSubjectOpen = "[S:S]";
  static constexpr const char* kSubjectClose = "[S:E]";

  static std::string entity_open_marker(const std::string& type) { return "[" + type + "_S]"; }
  static std::string entity_close_marker(const std::string& type) { return "[" + type + "_E]"; }

  static Vocabulary build(const std::vector<AnnotatedSentence>& corpus,
                          const std::vector<std::string>& entity_types);

  int size() const { return static_cast<int>(tokens_.size()); }
  int reserved_count() const { return reserved_; }

  // Exact lookup; throws on unknown token.
  int id(const std::string& token) const;
  // Lookup with UNK fallback for held-out tokens.
  int id_or_unk(const std::string& token) const;
  const std::string& token(int id) const;

  int pad_id() const { return 0; }
  int unk_id() const { return 1; }
  int subject_open_id() const { return 2; }
  int subject_close_id() const { return 3; }
  int entity_open_id(int type_index) const { return 4 + 2 * type_index; }
  int entity_close_id(int type_index) const { return 5 + 2 * type_index; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  // One token per line; index = line number.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int reserved_ = 0;

  void append(const std::string& token);
};

}  // namespace srx
