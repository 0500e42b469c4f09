#include "srx/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "srx/common.hpp"

namespace srx {

using nlohmann::json;

AnnotatedSentence sentence_from_json(const std::string& line, const std::string& where) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(where + ": JSON parse error: " + e.what());
  }
  AnnotatedSentence s;
  try {
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& je : j.value("entities", json::array())) {
      Entity e;
      e.start = je.at("start").get<int>();
      e.end = je.at("end").get<int>();
      e.type = je.at("type").get<std::string>();
      s.entities.push_back(std::move(e));
    }
    for (const auto& jr : j.value("relations", json::array())) {
      Relation r;
      r.subject = jr.at("subject").get<int>();
      r.object = jr.at("object").get<int>();
      r.type = jr.at("type").get<std::string>();
      s.relations.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(where + ": bad record: " + e.what());
  }
  return s;
}

std::string sentence_to_json(const AnnotatedSentence& s) {
  json j;
  j["tokens"] = s.tokens;
  j["entities"] = json::array();
  for (const Entity& e : s.entities) {
    j["entities"].push_back({{"start", e.start}, {"end", e.end}, {"type", e.type}});
  }
  j["relations"] = json::array();
  for (const Relation& r : s.relations) {
    j["relations"].push_back({{"subject", r.subject}, {"object", r.object}, {"type", r.type}});
  }
  return j.dump();
}

std::vector<AnnotatedSentence> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<AnnotatedSentence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(sentence_from_json(line, path + ":" + std::to_string(line_no)));
  }
  return out;
}

void save_jsonl(const std::vector<AnnotatedSentence>& sentences, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (const AnnotatedSentence& s : sentences) out << sentence_to_json(s) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": manifest parse error: " + e.what());
  }
  DatasetManifest m;
  try {
    m.entity_types = j.at("entity_types").get<std::vector<std::string>>();
    m.relation_types = j.at("relation_types").get<std::vector<std::string>>();
    m.train_path = j.value("train", "");
    m.dev_path = j.value("dev", "");
    m.test_path = j.value("test", "");
  } catch (const json::exception& e) {
    throw DataError(path + ": bad manifest: " + e.what());
  }
  if (m.entity_types.empty() || m.relation_types.empty()) {
    throw DataError(path + ": manifest must declare at least one entity and relation type");
  }
  // Split paths are relative to the manifest's directory.
  auto dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (dir / p).string();
  };
  resolve(m.train_path);
  resolve(m.dev_path);
  resolve(m.test_path);
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  json j;
  j["entity_types"] = m.entity_types;
  j["relation_types"] = m.relation_types;
  j["train"] = std::filesystem::path(m.train_path).filename().string();
  j["dev"] = std::filesystem::path(m.dev_path).filename().string();
  j["test"] = std::filesystem::path(m.test_path).filename().string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

void validate_sentence(const AnnotatedSentence& s, const std::vector<std::string>& entity_types,
                       const std::vector<std::string>& relation_types, const std::string& where) {
  int n = static_cast<int>(s.tokens.size());
  for (size_t i = 0; i < s.entities.size(); ++i) {
    const Entity& e = s.entities[i];
    if (e.start < 0 || e.end < e.start || e.end >= n) {
      throw DataError(where + ": entity " + std::to_string(i) + " span [" +
                      std::to_string(e.start) + ", " + std::to_string(e.end) +
                      "] invalid for sentence of length " + std::to_string(n));
    }
    if (std::find(entity_types.begin(), entity_types.end(), e.type) == entity_types.end()) {
      throw DataError(where + ": entity " + std::to_string(i) + " has undeclared type '" +
                      e.type + "'");
    }
  }
  int m = static_cast<int>(s.entities.size());
  for (size_t i = 0; i < s.relations.size(); ++i) {
    const Relation& r = s.relations[i];
    if (r.subject < 0 || r.subject >= m || r.object < 0 || r.object >= m) {
      throw DataError(where + ": relation " + std::to_string(i) + " references entity out of range");
    }
    if (std::find(relation_types.begin(), relation_types.end(), r.type) == relation_types.end()) {
      throw DataError(where + ": relation " + std::to_string(i) + " has undeclared type '" +
                      r.type + "'");
    }
  }
}

Dataset load_dataset(const std::string& manifest_path) {
  Dataset d;
  d.manifest = load_manifest(manifest_path);
  auto load_split = [&](const std::string& path, const char* name) {
    std::vector<AnnotatedSentence> split;
    if (path.empty()) return split;
    split = load_jsonl(path);
    for (size_t i = 0; i < split.size(); ++i) {
      validate_sentence(split[i], d.manifest.entity_types, d.manifest.relation_types,
                        std::string(name) + " sentence " + std::to_string(i));
    }
    return split;
  };
  d.train = load_split(d.manifest.train_path, "train");
  d.dev = load_split(d.manifest.dev_path, "dev");
  d.test = load_split(d.manifest.test_path, "test");
  log_info("dataset: |E|=" + std::to_string(d.manifest.entity_types.size()) +
           " |R|=" + std::to_string(d.manifest.relation_types.size()) +
           " train=" + std::to_string(d.train.size()) + " dev=" + std::to_string(d.dev.size()) +
           " test=" + std::to_string(d.test.size()));
  return d;
}

}  // namespace srx
