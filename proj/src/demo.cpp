#include "ewrl/demo.hpp"

#include <filesystem>
#include <fstream>

#include "ewrl/errors.hpp"

namespace ewrl {

namespace {

// Demo experiment shape. max_len = 5 is deliberate: it admits exactly one
// well-formed skeleton with room for a one-token answer, so every sampled
// format hit reinforces the same five positions instead of competing
// template variants, and the run ignites reliably. The seed is pinned:
// discovery of the output template from a uniform start is a rare event,
// and this seed ignites all four contexts well before the iteration budget
// (greedy decodes lock in around iteration 150 of 500).
constexpr int kSamplesPerContext = 64;
constexpr int kMaxLen = 5;
constexpr std::uint64_t kSeed = 1;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  out << text;
  if (!out) throw IoError("failed writing \"" + path + "\"");
}

}  // namespace

EmotionWheel default_wheel() {
  // Four primary clusters keep the policy vocabulary small enough that a
  // uniform start still stumbles onto the output template at a usable rate;
  // the synonym lists keep the matching metric non-trivial (cluster credit
  // for near-miss labels) without enlarging the vocabulary, which only
  // carries canonical labels.
  return EmotionWheel::from_parts(
      {
          {"joy", {"happy"}},
          {"sadness", {"sad"}},
          {"anger", {"angry"}},
          {"fear", {"scared"}},
      },
      {
          {"glad", "happy"},
          {"joyful", "happy"},
          {"cheerful", "happy"},
          {"excited", "happy"},
          {"unhappy", "sad"},
          {"gloomy", "sad"},
          {"sorrowful", "sad"},
          {"heartbroken", "sad"},
          {"mad", "angry"},
          {"furious", "angry"},
          {"irritated", "angry"},
          {"outraged", "angry"},
          {"afraid", "scared"},
          {"terrified", "scared"},
          {"anxious", "scared"},
          {"alarmed", "scared"},
      });
}

std::string default_wheel_json() { return default_wheel().to_json_text(); }

std::vector<Sample> make_demo_dataset(int samples_per_context) {
  if (samples_per_context < 1) {
    throw ContractViolation("samples_per_context must be >= 1");
  }
  struct ContextSpec {
    const char* tag;
    const char* query;
    const char* gt;
  };
  const ContextSpec specs[4] = {
      {"c0", "the speaker just got the job they wanted", "happy"},
      {"c1", "the speaker's best friend moved far away", "sad"},
      {"c2", "someone scratched the speaker's new car", "angry"},
      {"c3", "the speaker heard footsteps in the dark house", "scared"},
  };
  std::vector<Sample> out;
  out.reserve(size_t(samples_per_context) * 4);
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < samples_per_context; ++i) {
      Sample s;
      s.id = std::string(specs[c].tag) + "_" + std::to_string(i);
      s.context = c;
      s.query = specs[c].query;
      s.gt_labels = LabelSet::from_raw({specs[c].gt});
      out.push_back(std::move(s));
    }
  }
  return out;
}

int demo_samples_per_context() { return kSamplesPerContext; }

TrainConfig demo_train_config() {
  TrainConfig cfg;
  cfg.group_size = 8;
  cfg.clip_eps = 0.2;
  cfg.beta_format = 0.5;
  cfg.beta_kl = 0.01;
  cfg.learning_rate = 0.5;
  cfg.iterations = 500;
  cfg.inner_epochs = 1;
  cfg.seed = kSeed;
  cfg.std_floor = 1e-8;
  cfg.max_len = kMaxLen;
  return cfg;
}

std::string write_demo_bundle(const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory \"" + out_dir +
                  "\": " + ec.message());
  }
  const std::string wheel_path = (fs::path(out_dir) / "wheel.json").string();
  const std::string data_path = (fs::path(out_dir) / "dataset.jsonl").string();
  const std::string config_path = (fs::path(out_dir) / "config.ini").string();

  write_file(wheel_path, default_wheel_json());
  write_dataset(data_path, make_demo_dataset(kSamplesPerContext));

  RunConfig rc;
  rc.wheel_path = wheel_path;
  rc.dataset_path = data_path;
  rc.output_dir = (fs::path(out_dir) / "run").string();
  rc.checkpoint_every = 0;
  rc.report_format = ReportFormat::kBoth;
  rc.threads = 1;
  rc.train = demo_train_config();
  write_file(config_path, serialize_run_config(rc));
  return config_path;
}

}  // namespace ewrl
