#include "ewrl/dataset.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "ewrl/errors.hpp"

namespace ewrl {

std::vector<Sample> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset file \"" + path + "\"");
  }
  std::vector<Sample> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": malformed JSON line: " + e.what());
    }
    if (!j.is_object()) {
      throw ParseError(where + ": expected a JSON object");
    }
    for (const auto& [key, _] : j.items()) {
      if (key != "id" && key != "context" && key != "query" &&
          key != "labels") {
        throw ValidationError(where + ": unknown key \"" + key + "\"");
      }
    }
    if (!j.contains("id") || !j["id"].is_string()) {
      throw ParseError(where + ": missing string \"id\"");
    }
    Sample s;
    s.id = j["id"].get<std::string>();
    if (!seen.insert(s.id).second) {
      throw ValidationError(where + ": duplicate sample id \"" + s.id + "\"");
    }
    if (!j.contains("context") || !j["context"].is_number_integer()) {
      throw ParseError(where + ": sample \"" + s.id +
                       "\" is missing an integer \"context\"");
    }
    s.context = j["context"].get<int>();
    if (s.context < 0) {
      throw ValidationError(where + ": sample \"" + s.id +
                            "\" has a negative context index");
    }
    if (!j.contains("query") || !j["query"].is_string()) {
      throw ParseError(where + ": sample \"" + s.id +
                       "\" is missing a string \"query\"");
    }
    s.query = j["query"].get<std::string>();
    if (!j.contains("labels") || !j["labels"].is_array()) {
      throw ParseError(where + ": sample \"" + s.id +
                       "\" is missing a \"labels\" array");
    }
    std::vector<std::string> raw;
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) {
        throw ParseError(where + ": sample \"" + s.id +
                         "\" has a non-string label");
      }
      raw.push_back(l.get<std::string>());
    }
    s.gt_labels = LabelSet::from_raw(raw);
    if (s.gt_labels.empty()) {
      throw ValidationError(where + ": sample \"" + s.id +
                            "\" has no usable labels after normalization");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset(const std::string& path,
                   const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open dataset file \"" + path + "\" for writing");
  }
  for (const Sample& s : samples) {
    nlohmann::json j;
    j["id"] = s.id;
    j["context"] = s.context;
    j["query"] = s.query;
    j["labels"] = s.gt_labels.labels;
    out << j.dump() << "\n";
  }
  if (!out) {
    throw IoError("failed writing dataset file \"" + path + "\"");
  }
}

int dataset_num_contexts(const std::vector<Sample>& samples) {
  if (samples.empty()) {
    throw ValidationError("dataset is empty");
  }
  int n = 0;
  for (const Sample& s : samples) n = std::max(n, s.context + 1);
  return n;
}

}  // namespace ewrl
