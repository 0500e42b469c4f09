#include "srx/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "srx/common.hpp"

namespace srx {

void Vocabulary::append(const std::string& token) {
  if (index_.count(token) > 0) return;
  index_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<AnnotatedSentence>& corpus,
                             const std::vector<std::string>& entity_types) {
  if (corpus.empty()) throw DataError("build_vocabulary: empty corpus");
  Vocabulary v;
  v.append(kPad);
  v.append(kUnk);
  v.append(kSubjectOpen);
  v.append(kSubjectClose);
  for (const std::string& t : entity_types) {
    v.append(entity_open_marker(t));
    v.append(entity_close_marker(t));
  }
  v.reserved_ = static_cast<int>(v.tokens_.size());

  // std::map keeps the tie-break lexicographic without a second sort key.
  std::map<std::string, int64_t> counts;
  for (const AnnotatedSentence& s : corpus) {
    for (const std::string& t : s.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, int64_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [token, count] : ordered) v.append(token);
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw DataError("vocabulary: unknown token '" + token + "'");
  return it->second;
}

int Vocabulary::id_or_unk(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id() : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw DataError("vocabulary: index out of range");
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id_or_unk(t));
  return ids;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("vocabulary: cannot open '" + path + "' for writing");
  for (const std::string& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("vocabulary: cannot open '" + path + "'");
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) v.append(line);
  if (v.size() < 4) throw DataError("vocabulary: file '" + path + "' missing reserved tokens");
  // Reserved block = everything up to the last marker-form token before the
  // first ordinary one; recomputed from the stored order.
  int reserved = 4;
  while (reserved < v.size()) {
    const std::string& t = v.tokens_[static_cast<size_t>(reserved)];
    if (t.size() > 3 && t.front() == '[' && t.back() == ']' &&
        (t.compare(t.size() - 3, 3, "_S]") == 0 || t.compare(t.size() - 3, 3, "_E]") == 0)) {
      ++reserved;
    } else {
      break;
    }
  }
  v.reserved_ = reserved;
  return v;
}

}  // namespace srx
