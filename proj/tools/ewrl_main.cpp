#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "ewrl/commands.hpp"
#include "ewrl/errors.hpp"

namespace {

// Exit codes: 2 parse, 3 validation, 4 io, 5 internal (contract/numeric).
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitIo = 4;
constexpr int kExitInternal = 5;

int fail(const char* category, const std::exception& e, int code) {
  std::fprintf(stderr, "ERROR: %s: %s\n", category, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-wheel RL trainer: GRPO over a toy structured-output "
               "policy with emotion-cluster rewards"};
  app.require_subcommand(1);

  // train
  std::string config_path;
  std::uint64_t seed_value = 0;
  std::string out_override;
  auto* train = app.add_subcommand("train", "Run RL training from a config");
  train->add_option("--config", config_path, "Run config file")->required();
  auto* seed_opt =
      train->add_option("--seed", seed_value, "Override the config seed");
  auto* out_opt = train->add_option("--out", out_override,
                                    "Override the config output directory");

  // eval
  std::string pred_path, ref_path, wheel_path, report_path = "eval_report.json";
  int eval_threads = 1;
  auto* eval =
      app.add_subcommand("eval", "Score predictions against references");
  eval->add_option("predictions", pred_path, "Predictions JSONL")->required();
  eval->add_option("references", ref_path, "References JSONL")->required();
  eval->add_option("wheel", wheel_path, "Emotion wheel JSON")->required();
  eval->add_option("--out", report_path, "Report path (JSON)");
  eval->add_option("--threads", eval_threads, "Evaluation workers");

  // make-coldstart
  std::string desc_path, cs_wheel_path, cs_out_path;
  auto* coldstart = app.add_subcommand(
      "make-coldstart", "Convert description+labels JSONL into target JSONL");
  coldstart->add_option("descriptions", desc_path, "Input JSONL")->required();
  coldstart->add_option("wheel", cs_wheel_path, "Emotion wheel JSON")
      ->required();
  coldstart->add_option("out", cs_out_path, "Output JSONL")->required();

  // demo
  std::string demo_dir = "demo";
  auto* demo =
      app.add_subcommand("demo", "Write the bundled synthetic task files");
  demo->add_option("--out", demo_dir, "Directory for the demo bundle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      std::optional<std::uint64_t> seed;
      if (seed_opt->count() > 0) seed = seed_value;
      std::optional<std::string> out;
      if (out_opt->count() > 0) out = out_override;
      ewrl::run_train(config_path, seed, out);
    } else if (*eval) {
      ewrl::run_eval(pred_path, ref_path, wheel_path, report_path,
                     eval_threads);
    } else if (*coldstart) {
      ewrl::run_coldstart(desc_path, cs_wheel_path, cs_out_path);
    } else if (*demo) {
      ewrl::run_demo(demo_dir);
    }
  } catch (const ewrl::ParseError& e) {
    return fail("parse", e, kExitParse);
  } catch (const ewrl::ValidationError& e) {
    return fail("validation", e, kExitValidation);
  } catch (const ewrl::IoError& e) {
    return fail("io", e, kExitIo);
  } catch (const ewrl::NumericError& e) {
    return fail("numeric", e, kExitInternal);
  } catch (const ewrl::ContractViolation& e) {
    return fail("internal", e, kExitInternal);
  } catch (const std::exception& e) {
    return fail("internal", e, kExitInternal);
  }
  return 0;
}
