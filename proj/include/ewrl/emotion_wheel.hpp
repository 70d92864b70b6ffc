#pragma once

#include <string>
#include <string_view>
#include <map>
#include <vector>

namespace ewrl {

// One group of emotion words treated as semantically equivalent.
struct Cluster {
  int id = 0;            // dense index, 0..n-1 in file order
  std::string name;      // string id from the taxonomy file
  std::vector<std::string> labels;  // normalized, sorted, unique
};

// Flat partition of emotion words into clusters, plus a one-hop synonym map.
// Immutable after construction; safe to share across threads.
class EmotionWheel {
 public:
  static constexpr int kUnmatched = -1;

  // Parse + validate a taxonomy document (see file format in to_json_text).
  static EmotionWheel from_json_text(const std::string& text);
  static EmotionWheel from_json_file(const std::string& path);

  // Programmatic construction (mainly for tests). Runs the same validation.
  static EmotionWheel from_parts(
      const std::vector<std::pair<std::string, std::vector<std::string>>>&
          named_clusters,
      const std::map<std::string, std::string>& synonyms);

  // Canonical serialization: clusters in id order, labels sorted within each
  // cluster, synonym keys sorted. from_json_text(to_json_text()) round-trips.
  std::string to_json_text() const;

  int num_clusters() const { return static_cast<int>(clusters_.size()); }
  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::map<std::string, std::string>& synonyms() const {
    return synonyms_;
  }

  // All canonical labels, cluster order then label order (deterministic).
  std::vector<std::string> canonical_labels() const;

  // Dense cluster index for a raw label: normalization first, then direct
  // membership, then exactly one synonym hop. Unknown words -> kUnmatched.
  int cluster_of(std::string_view raw_label) const;

 private:
  EmotionWheel() = default;
  void validate_and_index();

  std::vector<Cluster> clusters_;
  std::map<std::string, std::string> synonyms_;       // surface -> canonical
  std::map<std::string, int> label_to_cluster_;       // canonical -> id
};

// Lowercase, strip surrounding whitespace/punctuation, collapse internal
// whitespace runs to one space. Returns "" for all-junk input. Does NOT
// apply synonyms (cluster_of does).
std::string normalize_label(std::string_view raw);

}  // namespace ewrl
