#include "ewrl/emotion_wheel.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ewrl/errors.hpp"

namespace ewrl {

namespace {

// Locale-independent ASCII classification. Bytes >= 0x80 (UTF-8
// continuation/multibyte) are treated as regular word characters.
bool is_space_ascii(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_punct_ascii(unsigned char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
         (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

char to_lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

std::string normalize_label(std::string_view raw) {
  size_t begin = 0;
  size_t end = raw.size();
  while (begin < end && (is_space_ascii(raw[begin]) || is_punct_ascii(raw[begin]))) {
    ++begin;
  }
  while (end > begin && (is_space_ascii(raw[end - 1]) || is_punct_ascii(raw[end - 1]))) {
    --end;
  }
  std::string out;
  out.reserve(end - begin);
  bool pending_space = false;
  for (size_t i = begin; i < end; ++i) {
    unsigned char c = static_cast<unsigned char>(raw[i]);
    if (is_space_ascii(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(to_lower_ascii(static_cast<char>(c)));
  }
  return out;
}

EmotionWheel EmotionWheel::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("taxonomy document is not valid JSON: ") +
                     e.what());
  }
  if (!doc.is_object()) {
    throw ParseError("taxonomy document root must be a JSON object");
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "clusters" && key != "synonyms") {
      throw ParseError("taxonomy document has unknown top-level key \"" + key +
                       "\"");
    }
  }
  if (!doc.contains("clusters") || !doc["clusters"].is_array()) {
    throw ParseError("taxonomy document must contain a \"clusters\" array");
  }

  std::vector<std::pair<std::string, std::vector<std::string>>> named;
  for (const auto& entry : doc["clusters"]) {
    if (!entry.is_object()) {
      throw ParseError("every cluster entry must be a JSON object");
    }
    for (const auto& [key, _] : entry.items()) {
      if (key != "id" && key != "labels" && key != "parent") {
        throw ParseError("cluster entry has unknown key \"" + key + "\"");
      }
    }
    if (!entry.contains("id") || !entry["id"].is_string()) {
      throw ParseError("cluster entry is missing a string \"id\"");
    }
    if (!entry.contains("labels") || !entry["labels"].is_array()) {
      throw ParseError("cluster \"" + entry["id"].get<std::string>() +
                       "\" is missing a \"labels\" array");
    }
    if (entry.contains("parent") && !entry["parent"].is_null()) {
      throw ParseError("cluster \"" + entry["id"].get<std::string>() +
                       "\" has non-null \"parent\" (reserved, must be null)");
    }
    std::vector<std::string> labels;
    for (const auto& l : entry["labels"]) {
      if (!l.is_string()) {
        throw ParseError("cluster \"" + entry["id"].get<std::string>() +
                         "\" contains a non-string label");
      }
      labels.push_back(l.get<std::string>());
    }
    named.emplace_back(entry["id"].get<std::string>(), std::move(labels));
  }

  std::map<std::string, std::string> synonyms;
  if (doc.contains("synonyms")) {
    if (!doc["synonyms"].is_object()) {
      throw ParseError("\"synonyms\" must be a JSON object");
    }
    for (const auto& [surface, target] : doc["synonyms"].items()) {
      if (!target.is_string()) {
        throw ParseError("synonym \"" + surface + "\" maps to a non-string value");
      }
      synonyms[surface] = target.get<std::string>();
    }
  }
  return from_parts(named, synonyms);
}

EmotionWheel EmotionWheel::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open taxonomy file \"" + path + "\"");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

EmotionWheel EmotionWheel::from_parts(
    const std::vector<std::pair<std::string, std::vector<std::string>>>&
        named_clusters,
    const std::map<std::string, std::string>& synonyms) {
  EmotionWheel wheel;
  int next_id = 0;
  for (const auto& [name, raw_labels] : named_clusters) {
    Cluster c;
    c.id = next_id++;
    c.name = name;
    for (const auto& raw : raw_labels) {
      std::string norm = normalize_label(raw);
      if (norm.empty()) {
        throw ValidationError("cluster \"" + name +
                              "\" contains label \"" + raw +
                              "\" that normalizes to empty text");
      }
      c.labels.push_back(std::move(norm));
    }
    std::sort(c.labels.begin(), c.labels.end());
    c.labels.erase(std::unique(c.labels.begin(), c.labels.end()),
                   c.labels.end());
    if (c.labels.empty()) {
      throw ValidationError("cluster \"" + name + "\" has no labels");
    }
    wheel.clusters_.push_back(std::move(c));
  }
  for (const auto& [surface, target] : synonyms) {
    std::string s = normalize_label(surface);
    std::string t = normalize_label(target);
    if (s.empty()) {
      throw ValidationError("synonym key \"" + surface +
                            "\" normalizes to empty text");
    }
    if (t.empty()) {
      throw ValidationError("synonym target for \"" + surface +
                            "\" normalizes to empty text");
    }
    wheel.synonyms_[s] = t;
  }
  wheel.validate_and_index();
  return wheel;
}

void EmotionWheel::validate_and_index() {
  if (clusters_.empty()) {
    throw ValidationError("taxonomy has no clusters");
  }
  label_to_cluster_.clear();
  for (const Cluster& c : clusters_) {
    for (const std::string& label : c.labels) {
      auto [it, inserted] = label_to_cluster_.emplace(label, c.id);
      if (!inserted) {
        throw ValidationError("label \"" + label +
                              "\" appears in more than one cluster");
      }
    }
  }
  for (const auto& [surface, target] : synonyms_) {
    if (!label_to_cluster_.count(target)) {
      throw ValidationError("synonym \"" + surface + "\" points to \"" +
                            target + "\" which is not a canonical label");
    }
    if (label_to_cluster_.count(surface)) {
      throw ValidationError("synonym key \"" + surface +
                            "\" is already a canonical label");
    }
  }
}

std::vector<std::string> EmotionWheel::canonical_labels() const {
  std::vector<std::string> out;
  for (const Cluster& c : clusters_) {
    out.insert(out.end(), c.labels.begin(), c.labels.end());
  }
  return out;
}

int EmotionWheel::cluster_of(std::string_view raw_label) const {
  std::string norm = normalize_label(raw_label);
  if (norm.empty()) {
    return kUnmatched;
  }
  auto direct = label_to_cluster_.find(norm);
  if (direct != label_to_cluster_.end()) {
    return direct->second;
  }
  auto syn = synonyms_.find(norm);
  if (syn != synonyms_.end()) {
    auto hop = label_to_cluster_.find(syn->second);
    if (hop != label_to_cluster_.end()) {
      return hop->second;
    }
  }
  return kUnmatched;
}

std::string EmotionWheel::to_json_text() const {
  nlohmann::json doc;
  doc["clusters"] = nlohmann::json::array();
  for (const Cluster& c : clusters_) {
    nlohmann::json entry;
    entry["id"] = c.name;
    entry["labels"] = c.labels;  // already sorted
    entry["parent"] = nullptr;
    doc["clusters"].push_back(entry);
  }
  doc["synonyms"] = nlohmann::json::object();
  for (const auto& [surface, target] : synonyms_) {
    doc["synonyms"][surface] = target;  // std::map iterates sorted
  }
  return doc.dump(2) + "\n";
}

}  // namespace ewrl
