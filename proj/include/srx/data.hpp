#pragma once

#include <optional>
#include <string>
#include <vector>

namespace srx {

// Token span with inclusive end, per the dataset schema.
struct Entity {
  int start = 0;
  int end = 0;
  std::string type;

  bool operator==(const Entity&) const = default;
};

// Relation between entities referenced by index into the sentence's
// entity list; subject is the head, object the tail.
struct Relation {
  int subject = 0;
  int object = 0;
  std::string type;

  bool operator==(const Relation&) const = default;
};

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::vector<Entity> entities;
  std::vector<Relation> relations;

  bool operator==(const AnnotatedSentence&) const = default;
};

// Materialized relation triple with argument spans and types. An empty
// type string marks an argument whose span was not typed by entity
// extraction; it never matches a declared type under strict scoring.
struct RelationTriple {
  Entity subject;
  Entity object;
  std::string relation;
  double prob = 1.0;
};

struct DatasetManifest {
  std::vector<std::string> entity_types;
  std::vector<std::string> relation_types;
  std::string train_path;
  std::string dev_path;
  std::string test_path;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<AnnotatedSentence> train;
  std::vector<AnnotatedSentence> dev;
  std::vector<AnnotatedSentence> test;
};

// One JSON object per line:
//   {"tokens": [...], "entities": [{"start","end","type"}],
//    "relations": [{"subject","object","type"}]}
std::vector<AnnotatedSentence> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<AnnotatedSentence>& sentences, const std::string& path);

// Parse / serialize a single sentence (exposed for prediction files too).
AnnotatedSentence sentence_from_json(const std::string& line, const std::string& where);
std::string sentence_to_json(const AnnotatedSentence& s);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

// Loads all splits named by the manifest, validates every sentence against
// the declared type inventories, and logs corpus statistics.
Dataset load_dataset(const std::string& manifest_path);

// Throws DataError naming the offending sentence when an invariant fails.
void validate_sentence(const AnnotatedSentence& s, const std::vector<std::string>& entity_types,
                       const std::vector<std::string>& relation_types, const std::string& where);

}  // namespace srx
