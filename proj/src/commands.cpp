#include "ewrl/commands.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "ewrl/dataset.hpp"
#include "ewrl/demo.hpp"
#include "ewrl/errors.hpp"
#include "ewrl/grpo.hpp"
#include "ewrl/ov_metric.hpp"
#include "ewrl/rewards.hpp"
#include "ewrl/run_config.hpp"
#include "ewrl/toy_policy.hpp"

namespace ewrl {

namespace fs = std::filesystem;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing \"" + path + "\"");
}

std::string checkpoint_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "checkpoint_%06d.json", iteration);
  return buf;
}

}  // namespace

void run_train(const std::string& config_path,
               std::optional<std::uint64_t> seed_override,
               std::optional<std::string> output_dir_override) {
  RunConfig cfg = load_run_config(config_path);
  if (seed_override) cfg.train.seed = *seed_override;
  if (output_dir_override) cfg.output_dir = *output_dir_override;

  EmotionWheel wheel = EmotionWheel::from_json_file(cfg.wheel_path);
  std::vector<Sample> dataset = read_dataset(cfg.dataset_path);

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory \"" + cfg.output_dir +
                  "\": " + ec.message());
  }
  const fs::path out(cfg.output_dir);

  // Provenance echo: the exact settings this run used, including overrides.
  write_file((out / "resolved_config.ini").string(),
             serialize_run_config(cfg));

  Vocab vocab = Vocab::from_wheel(wheel);

  TrainOptions options;
  options.threads = cfg.threads;
  options.checkpoint_every = cfg.checkpoint_every;
  options.on_checkpoint = [&](int iteration, const PolicyParams& params) {
    save_checkpoint((out / checkpoint_name(iteration)).string(), params,
                    vocab);
  };

  TrainResult res = train(dataset, wheel, cfg.train, options);

  if (cfg.report_format == ReportFormat::kCsv ||
      cfg.report_format == ReportFormat::kBoth) {
    write_file((out / "trace.csv").string(), res.trace.to_csv());
  }
  if (cfg.report_format == ReportFormat::kJson ||
      cfg.report_format == ReportFormat::kBoth) {
    write_file((out / "trace.json").string(), res.trace.to_json_text());
  }
  save_checkpoint((out / "checkpoint_final.json").string(), res.params,
                  vocab);

  // Summary: final trace row plus a greedy decode per context, scored
  // against every sample of that context.
  int num_contexts = dataset_num_contexts(dataset);
  nlohmann::json greedy = nlohmann::json::array();
  double acc_sum = 0.0;
  int fmt_count = 0;
  for (int c = 0; c < num_contexts; ++c) {
    TokenSeq seq = greedy_decode(res.params, vocab, c);
    std::string text = detokenize(vocab, seq);
    StructuredOutput parsed = check_format(text);
    double acc = 0.0;
    int n = 0;
    for (const Sample& s : dataset) {
      if (s.context != c) continue;
      if (parsed.well_formed) {
        acc += ew_score(extract_answer(parsed), s.gt_labels, wheel).score;
      }
      ++n;
    }
    if (n > 0) acc /= double(n);
    acc_sum += acc;
    fmt_count += parsed.well_formed ? 1 : 0;
    greedy.push_back({{"context", c},
                      {"text", text},
                      {"well_formed", parsed.well_formed},
                      {"mean_accuracy", acc}});
  }
  double greedy_acc = num_contexts > 0 ? acc_sum / num_contexts : 0.0;
  double greedy_fmt =
      num_contexts > 0 ? double(fmt_count) / num_contexts : 0.0;

  nlohmann::json summary;
  summary["iterations_completed"] = res.trace.records.size();
  summary["aborted"] = res.trace.aborted;
  if (res.trace.aborted) summary["abort_reason"] = res.trace.abort_reason;
  if (!res.trace.records.empty()) {
    const TraceRecord& last = res.trace.records.back();
    summary["final_mean_reward"] = last.mean_reward;
    summary["final_mean_accuracy"] = last.mean_accuracy;
    summary["final_format_rate"] = last.format_rate;
  }
  summary["greedy_mean_accuracy"] = greedy_acc;
  summary["greedy_format_rate"] = greedy_fmt;
  summary["greedy_decodes"] = greedy;
  write_file((out / "summary.json").string(), summary.dump(2) + "\n");

  std::printf("RESULT: greedy_mean_accuracy=%.4f greedy_format_rate=%.4f\n",
              greedy_acc, greedy_fmt);
}

void run_eval(const std::string& predictions_path,
              const std::string& references_path,
              const std::string& wheel_path, const std::string& report_path,
              int threads) {
  EmotionWheel wheel = EmotionWheel::from_json_file(wheel_path);
  BatchReport report =
      batch_evaluate(predictions_path, references_path, wheel, threads);
  write_file(report_path, report.to_json_text());
  std::printf("RESULT: %.4f\n", report.aggregate.score);
}

void run_coldstart(const std::string& descriptions_path,
                   const std::string& wheel_path,
                   const std::string& out_path) {
  EmotionWheel wheel = EmotionWheel::from_json_file(wheel_path);
  std::ifstream in(descriptions_path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open descriptions file \"" + descriptions_path +
                  "\"");
  }

  // Build every row first; only write the file when all rows are valid.
  std::ostringstream buffered;
  std::string line;
  int lineno = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where =
        descriptions_path + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": malformed JSON line: " + e.what());
    }
    if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (key != "id" && key != "description" && key != "labels") {
        throw ValidationError(where + ": unknown key \"" + key + "\"");
      }
    }
    if (!j.contains("id") || !j["id"].is_string()) {
      throw ParseError(where + ": missing string \"id\"");
    }
    if (!j.contains("description") || !j["description"].is_string()) {
      throw ParseError(where + ": missing string \"description\"");
    }
    if (!j.contains("labels") || !j["labels"].is_array()) {
      throw ParseError(where + ": missing array \"labels\"");
    }
    std::vector<std::string> labels;
    for (const auto& v : j["labels"]) {
      if (!v.is_string()) {
        throw ParseError(where + ": labels must all be strings");
      }
      labels.push_back(v.get<std::string>());
    }
    LabelSet set = LabelSet::from_raw(labels);
    if (set.empty()) {
      throw ValidationError(where + ": labels are empty after normalization");
    }
    // Targets teach the answer vocabulary; a label the wheel cannot place
    // would train toward text the metric always scores zero.
    for (const std::string& label : set.labels) {
      if (wheel.cluster_of(label) < 0) {
        throw ValidationError(where + ": label \"" + label +
                              "\" is not on the wheel");
      }
    }
    std::string target;
    try {
      target = format_cold_start_target(j["description"].get<std::string>(),
                                        set);
    } catch (const std::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!check_format(target).well_formed) {
      throw ValidationError(where +
                            ": constructed target fails the format check");
    }
    nlohmann::json row;
    row["id"] = j["id"];
    row["target"] = target;
    buffered << row.dump() << "\n";
    ++rows;
  }
  if (in.bad()) {
    throw IoError("failed reading \"" + descriptions_path + "\"");
  }
  write_file(out_path, buffered.str());
  std::printf("RESULT: wrote %d cold-start targets\n", rows);
}

void run_demo(const std::string& out_dir) {
  std::string config_path = write_demo_bundle(out_dir);
  std::printf("RESULT: %s\n", config_path.c_str());
}

}  // namespace ewrl
