#pragma once

#include <string>
#include <vector>

#include "ewrl/ov_metric.hpp"

namespace ewrl {

// One training sample: a context index standing in for the multimodal input,
// the user message, and the ground-truth open-vocabulary labels.
struct Sample {
  std::string id;
  int context = 0;
  std::string query;
  LabelSet gt_labels;  // non-empty
};

// JSON Lines {"id", "context", "query", "labels"} per line. Validates id
// uniqueness, context >= 0, and non-empty normalized labels; errors name the
// line number and id. Unknown keys are rejected.
std::vector<Sample> read_dataset(const std::string& path);
void write_dataset(const std::string& path, const std::vector<Sample>& samples);

// Highest context index + 1; throws ValidationError on an empty dataset.
int dataset_num_contexts(const std::vector<Sample>& samples);

}  // namespace ewrl
