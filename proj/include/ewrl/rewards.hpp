#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ewrl/emotion_wheel.hpp"
#include "ewrl/ov_metric.hpp"

namespace ewrl {

// A model output parsed against the required two-block template.
struct StructuredOutput {
  std::string raw;
  std::optional<std::string> think;   // set iff well_formed
  std::optional<std::string> answer;  // set iff well_formed
  bool well_formed = false;
};

// Per-output reward decomposition: total = accuracy + beta_format * format.
struct RewardBreakdown {
  int format = 0;          // 1 iff the output matched the template exactly
  double accuracy = 0.0;   // emotion-wheel score of the extracted answer
  double total = 0.0;
  double beta_format = 0.0;
};

// Strict template check. well_formed iff raw is exactly
//   <think>T</think>[optional whitespace run]<answer>A</answer>
// with nothing before or after and no tag token inside T or A. Never throws;
// T and A are captured verbatim when well-formed.
StructuredOutput check_format(std::string_view raw);

inline int format_reward(const StructuredOutput& o) {
  return o.well_formed ? 1 : 0;
}

// Answer text -> label set: split on commas and the standalone word "and"
// (case-insensitive), then normalize/dedup. Malformed output -> empty set.
LabelSet extract_answer(const StructuredOutput& output);

// Split helper exposed for tests: raw answer text to raw pieces.
std::vector<std::string> split_answer_text(std::string_view answer);

// Composite reward for one raw output string against a ground-truth set.
// Throws ContractViolation when gt is empty (propagated from the metric).
RewardBreakdown combined_reward(std::string_view raw, const LabelSet& gt,
                                const EmotionWheel& wheel, double beta_format);

// Render a supervision target in the required template. Labels are joined
// with ", ". Throws ContractViolation when labels is empty, ValidationError
// when the rendered target would not parse back to exactly `labels` (tag
// text inside the description, separator text inside a label).
std::string format_cold_start_target(std::string_view description,
                                     const LabelSet& labels);

}  // namespace ewrl
