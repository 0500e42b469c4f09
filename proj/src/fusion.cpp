#include "srx/fusion.hpp"

#include <algorithm>

#include "srx/common.hpp"

namespace srx {

std::vector<std::string> MarkedSentence::surface() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const MarkedToken& t : tokens) out.push_back(t.text);
  return out;
}

std::vector<std::string> MarkedSentence::stripped() const {
  std::vector<std::string> out;
  for (const MarkedToken& t : tokens) {
    if (t.kind == MarkedToken::Word) out.push_back(t.text);
  }
  return out;
}

bool MarkedSentence::to_original(int i, int j, int* out_i, int* out_j) const {
  if (i < 0 || j >= static_cast<int>(tokens.size()) || i > j) return false;
  if (tokens[static_cast<size_t>(i)].kind != MarkedToken::Word) return false;
  if (tokens[static_cast<size_t>(j)].kind != MarkedToken::Word) return false;
  *out_i = tokens[static_cast<size_t>(i)].orig;
  *out_j = tokens[static_cast<size_t>(j)].orig;
  return true;
}

namespace {

void validate_span(int start, int end, int n, const char* what) {
  if (start < 0 || end < start || end >= n) {
    throw DataError(std::string(what) + " span [" + std::to_string(start) + ", " +
                    std::to_string(end) + "] invalid for sentence of length " + std::to_string(n));
  }
}

}  // namespace

MarkedSentence insert_entity_markers(const std::vector<std::string>& tokens,
                                     const std::vector<TypedSpan>& entities,
                                     const std::vector<std::string>& entity_type_names) {
  int n = static_cast<int>(tokens.size());
  for (const TypedSpan& e : entities) {
    validate_span(e.start, e.end, n, "entity");
    if (e.type < 0 || e.type >= static_cast<int>(entity_type_names.size())) {
      throw DataError("entity type index " + std::to_string(e.type) + " out of range");
    }
  }

  // openers at gap g: spans starting at g, longest first (outermost)
  // closers at gap g: spans ending at g-1, inside-out (longest closes last)
  std::vector<TypedSpan> sorted(entities);
  std::sort(sorted.begin(), sorted.end(), [](const TypedSpan& a, const TypedSpan& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end > b.end;
    return a.type < b.type;
  });

  MarkedSentence out;
  out.original_length = n;
  out.orig_to_marked.assign(static_cast<size_t>(n), -1);
  for (int g = 0; g <= n; ++g) {
    std::vector<const TypedSpan*> closers;
    for (const TypedSpan& e : sorted) {
      if (e.end == g - 1) closers.push_back(&e);
    }
    std::sort(closers.begin(), closers.end(), [](const TypedSpan* a, const TypedSpan* b) {
      if (a->start != b->start) return a->start > b->start;  // shortest closes first
      return a->type > b->type;
    });
    for (const TypedSpan* e : closers) {
      MarkedToken t;
      t.text = Vocabulary::entity_close_marker(entity_type_names[static_cast<size_t>(e->type)]);
      t.kind = MarkedToken::EntityClose;
      t.span_start = e->start;
      t.span_end = e->end;
      out.tokens.push_back(std::move(t));
    }
    for (const TypedSpan& e : sorted) {
      if (e.start != g) continue;
      MarkedToken t;
      t.text = Vocabulary::entity_open_marker(entity_type_names[static_cast<size_t>(e.type)]);
      t.kind = MarkedToken::EntityOpen;
      t.span_start = e.start;
      t.span_end = e.end;
      out.tokens.push_back(std::move(t));
    }
    if (g < n) {
      MarkedToken t;
      t.text = tokens[static_cast<size_t>(g)];
      t.kind = MarkedToken::Word;
      t.orig = g;
      out.orig_to_marked[static_cast<size_t>(g)] = static_cast<int>(out.tokens.size());
      out.tokens.push_back(std::move(t));
    }
  }
  return out;
}

MarkedSentence insert_subject_markers(const MarkedSentence& marked, Span subject) {
  validate_span(subject.start, subject.end, marked.original_length, "subject");

  for (const MarkedToken& t : marked.tokens) {
    if (t.kind != MarkedToken::EntityOpen) continue;
    bool crosses = (t.span_start < subject.start && t.span_end >= subject.start &&
                    t.span_end < subject.end) ||
                   (t.span_start > subject.start && t.span_start <= subject.end &&
                    t.span_end > subject.end);
    if (crosses) {
      log_debug("subject span [" + std::to_string(subject.start) + ", " +
                std::to_string(subject.end) + "] crosses entity span [" +
                std::to_string(t.span_start) + ", " + std::to_string(t.span_end) +
                "]; outside-wrap rule applied");
    }
  }

  int open_pos = marked.orig_to_marked[static_cast<size_t>(subject.start)];
  while (open_pos > 0) {
    const MarkedToken& prev = marked.tokens[static_cast<size_t>(open_pos - 1)];
    if (prev.kind == MarkedToken::EntityOpen && prev.span_start >= subject.start &&
        prev.span_end <= subject.end) {
      --open_pos;
    } else {
      break;
    }
  }
  int close_pos = marked.orig_to_marked[static_cast<size_t>(subject.end)];
  while (close_pos + 1 < static_cast<int>(marked.tokens.size())) {
    const MarkedToken& next = marked.tokens[static_cast<size_t>(close_pos + 1)];
    if (next.kind == MarkedToken::EntityClose && next.span_start >= subject.start &&
        next.span_end <= subject.end) {
      ++close_pos;
    } else {
      break;
    }
  }

  MarkedSentence out;
  out.original_length = marked.original_length;
  out.orig_to_marked.assign(static_cast<size_t>(marked.original_length), -1);
  for (int i = 0; i < static_cast<int>(marked.tokens.size()); ++i) {
    if (i == open_pos) {
      MarkedToken t;
      t.text = Vocabulary::kSubjectOpen;
      t.kind = MarkedToken::SubjectOpen;
      t.span_start = subject.start;
      t.span_end = subject.end;
      out.tokens.push_back(std::move(t));
    }
    MarkedToken t = marked.tokens[static_cast<size_t>(i)];
    if (t.kind == MarkedToken::Word) {
      out.orig_to_marked[static_cast<size_t>(t.orig)] = static_cast<int>(out.tokens.size());
    }
    out.tokens.push_back(std::move(t));
    if (i == close_pos) {
      MarkedToken s;
      s.text = Vocabulary::kSubjectClose;
      s.kind = MarkedToken::SubjectClose;
      s.span_start = subject.start;
      s.span_end = subject.end;
      out.tokens.push_back(std::move(s));
    }
  }
  return out;
}

std::pair<std::vector<int>, std::vector<int>> tag_tokens(
    int n_tokens, const std::vector<TypedSpan>& entities, const std::optional<Span>& subject,
    int none_tag) {
  for (const TypedSpan& e : entities) validate_span(e.start, e.end, n_tokens, "entity");
  std::vector<int> entity_tags(static_cast<size_t>(n_tokens), none_tag);
  for (int i = 0; i < n_tokens; ++i) {
    const TypedSpan* best = nullptr;
    for (const TypedSpan& e : entities) {
      if (e.start > i || e.end < i) continue;
      if (best == nullptr) {
        best = &e;
        continue;
      }
      int len_e = e.end - e.start, len_b = best->end - best->start;
      if (len_e != len_b ? len_e > len_b
          : e.prob != best->prob ? e.prob > best->prob
          : e.start != best->start ? e.start < best->start
                                   : e.type < best->type) {
        best = &e;
      }
    }
    if (best != nullptr) entity_tags[static_cast<size_t>(i)] = best->type;
  }
  std::vector<int> subject_tags(static_cast<size_t>(n_tokens), 0);
  if (subject.has_value()) {
    validate_span(subject->start, subject->end, n_tokens, "subject");
    for (int i = subject->start; i <= subject->end; ++i) subject_tags[static_cast<size_t>(i)] = 1;
  }
  return {std::move(entity_tags), std::move(subject_tags)};
}

}  // namespace srx
