#pragma once

#include <span>
#include <string>
#include <vector>

#include "ewrl/emotion_wheel.hpp"

namespace ewrl {

// Deduplicated, normalized list of emotion words (insertion order kept).
struct LabelSet {
  std::vector<std::string> labels;

  // Normalize every raw entry, drop the ones that normalize to empty text,
  // dedup keeping first occurrence.
  static LabelSet from_raw(std::span<const std::string> raw);
  static LabelSet from_raw(std::initializer_list<std::string> raw);

  bool empty() const { return labels.empty(); }
  size_t size() const { return labels.size(); }
  bool operator==(const LabelSet&) const = default;
};

// Outcome of scoring one prediction set against one ground-truth set.
struct MetricReport {
  double score = 0.0;      // (precision + recall) / 2
  double precision = 0.0;  // matched_pred / |pred|, 0 when pred is empty
  double recall = 0.0;     // matched_gt / |gt|
  int matched_pred = 0;
  int matched_gt = 0;
  // Labels (pred first, then gt, deduplicated) that resolve to no cluster.
  std::vector<std::string> unmatched_labels;
};

// Cluster-set precision/recall between predicted and ground-truth labels.
// A predicted label counts as matched iff its cluster is among the clusters
// of the ground truth, and vice versa; words outside the wheel never match.
// Throws ContractViolation when gt is empty.
MetricReport ew_score(const LabelSet& pred, const LabelSet& gt,
                      const EmotionWheel& wheel);

struct SampleReport {
  std::string id;
  MetricReport report;
};

struct BatchReport {
  // score/precision/recall are unweighted means over samples; matched counts
  // are sums; unmatched_labels is the deduplicated union.
  MetricReport aggregate;
  std::vector<SampleReport> per_sample;  // sorted by sample id

  std::string to_json_text() const;
};

struct EvalItem {
  std::string id;
  LabelSet pred;
  LabelSet gt;
};

// Score a batch of in-memory items. Output is identical for every `threads`
// value (including 1): items are scored independently into fixed slots and
// reduced in id order. threads <= 0 picks the runtime default.
BatchReport evaluate_pairs(std::vector<EvalItem> items,
                           const EmotionWheel& wheel, int threads = 1);

// Load predictions/references JSON Lines files ({"id", "labels"} per line),
// align them by id (erroring on any mismatch, naming line and id), then
// delegate to evaluate_pairs.
BatchReport batch_evaluate(const std::string& predictions_path,
                           const std::string& references_path,
                           const EmotionWheel& wheel, int threads = 1);

// Parse one {"id", "labels"} JSONL file. Exposed for reuse by the CLI.
std::vector<std::pair<std::string, LabelSet>> read_label_file(
    const std::string& path);

}  // namespace ewrl
