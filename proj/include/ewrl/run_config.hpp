#pragma once

#include <string>

#include "ewrl/grpo.hpp"

namespace ewrl {

// Where trace/report artifacts may be written, parsed from a [run]/[train]
// sectioned key = value text file ('#' starts a comment).
enum class ReportFormat { kCsv, kJson, kBoth };

std::string to_string(ReportFormat f);

struct RunConfig {
  std::string wheel_path;
  std::string dataset_path;
  std::string output_dir;
  int checkpoint_every = 0;  // 0 = only the final checkpoint
  ReportFormat report_format = ReportFormat::kBoth;
  int threads = 1;
  TrainConfig train;

  // Load-time bounds: everything TrainConfig::validate() checks, plus
  // learning_rate strictly positive and the three paths non-empty.
  void validate() const;
};

// Parses config text. Unknown sections or keys, duplicate keys, and values
// that fail to parse as their declared type are validation/parse errors
// naming the offender. `origin` labels error messages (usually a file path).
RunConfig parse_run_config_text(const std::string& text,
                                const std::string& origin = "<config>");

RunConfig load_run_config(const std::string& path);

// Canonical echo of a resolved config: every key explicit, fixed order,
// shortest round-trip reals. Parsing the output reproduces the input struct.
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace ewrl
