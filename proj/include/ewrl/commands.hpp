#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace ewrl {

// Command bodies for the CLI. Each throws the module errors (ParseError,
// ValidationError, IoError, NumericError, ContractViolation); the CLI entry
// point maps them to exit codes and single-line stderr diagnostics.

// Loads the config, runs training, and writes into the output directory:
// resolved_config.ini, trace.csv / trace.json (per report_format),
// checkpoint_final.json, periodic checkpoint_NNNNNN.json when
// checkpoint_every > 0, and summary.json. Prints a RESULT: line.
void run_train(const std::string& config_path,
               std::optional<std::uint64_t> seed_override,
               std::optional<std::string> output_dir_override);

// Scores predictions against references and writes the JSON report.
// Prints the aggregate score as a RESULT: line with 4 decimals.
void run_eval(const std::string& predictions_path,
              const std::string& references_path,
              const std::string& wheel_path, const std::string& report_path,
              int threads);

// Converts description+labels JSONL into cold-start target JSONL. Every
// target is format-checked before anything is written; on any row error the
// output file is not created.
void run_coldstart(const std::string& descriptions_path,
                   const std::string& wheel_path,
                   const std::string& out_path);

// Writes the bundled synthetic task (wheel.json, dataset.jsonl, config.ini)
// into out_dir and prints the config path as a RESULT: line.
void run_demo(const std::string& out_dir);

}  // namespace ewrl
