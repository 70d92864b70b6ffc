// Config file parsing/serialization and the bundled demo task.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "ewrl/demo.hpp"
#include "ewrl/errors.hpp"
#include "ewrl/rewards.hpp"
#include "ewrl/dataset.hpp"
#include "ewrl/run_config.hpp"
#include "ewrl/toy_policy.hpp"

using namespace ewrl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ewrl_cfg_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string minimal_config_text() {
  return "[run]\n"
         "wheel = wheel.json\n"
         "dataset = data.jsonl\n"
         "output_dir = out\n";
}

}  // namespace

TEST_CASE("config: minimal text parses with defaults") {
  RunConfig cfg = parse_run_config_text(minimal_config_text());
  CHECK(cfg.wheel_path == "wheel.json");
  CHECK(cfg.dataset_path == "data.jsonl");
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.checkpoint_every == 0);
  CHECK(cfg.report_format == ReportFormat::kBoth);
  CHECK(cfg.threads == 1);
  // TrainConfig defaults pass validation untouched.
  CHECK(cfg.train.group_size >= 2);
  CHECK(cfg.train.learning_rate > 0);
}

TEST_CASE("config: comments, blank lines, and spacing are tolerated") {
  std::string text =
      "# top comment\n"
      "\n"
      "[run]\n"
      "  wheel   =  w.json  # trailing comment\n"
      "dataset=d.jsonl\n"
      "output_dir = out dir with spaces\n"
      "\n"
      "[train]\n"
      "iterations = 7\n";
  RunConfig cfg = parse_run_config_text(text);
  CHECK(cfg.wheel_path == "w.json");
  CHECK(cfg.dataset_path == "d.jsonl");
  CHECK(cfg.output_dir == "out dir with spaces");
  CHECK(cfg.train.iterations == 7);
}

TEST_CASE("config: every [train] key lands in the train struct") {
  std::string text = minimal_config_text() +
                     "checkpoint_every = 25\n"
                     "report_format = csv\n"
                     "threads = 3\n"
                     "[train]\n"
                     "group_size = 4\n"
                     "clip_eps = 0.3\n"
                     "beta_format = 0.25\n"
                     "beta_kl = 0.05\n"
                     "learning_rate = 0.125\n"
                     "iterations = 42\n"
                     "inner_epochs = 2\n"
                     "seed = 18446744073709551615\n"
                     "std_floor = 1e-6\n"
                     "max_len = 7\n";
  RunConfig cfg = parse_run_config_text(text);
  CHECK(cfg.checkpoint_every == 25);
  CHECK(cfg.report_format == ReportFormat::kCsv);
  CHECK(cfg.threads == 3);
  CHECK(cfg.train.group_size == 4);
  CHECK(cfg.train.clip_eps == doctest::Approx(0.3));
  CHECK(cfg.train.beta_format == doctest::Approx(0.25));
  CHECK(cfg.train.beta_kl == doctest::Approx(0.05));
  CHECK(cfg.train.learning_rate == doctest::Approx(0.125));
  CHECK(cfg.train.iterations == 42);
  CHECK(cfg.train.inner_epochs == 2);
  CHECK(cfg.train.seed == 18446744073709551615ull);
  CHECK(cfg.train.std_floor == doctest::Approx(1e-6));
  CHECK(cfg.train.max_len == 7);
}

TEST_CASE("config: serialize/parse round-trip is exact") {
  RunConfig cfg = parse_run_config_text(minimal_config_text());
  cfg.checkpoint_every = 100;
  cfg.report_format = ReportFormat::kJson;
  cfg.threads = 2;
  cfg.train.clip_eps = 0.2;
  cfg.train.beta_kl = 0.01;
  cfg.train.learning_rate = 0.1 + 0.2;  // not exactly representable as text naively
  cfg.train.std_floor = 1e-8;
  cfg.train.seed = 12345678901234567ull;

  std::string echo = serialize_run_config(cfg);
  RunConfig back = parse_run_config_text(echo, "<echo>");
  CHECK(back.wheel_path == cfg.wheel_path);
  CHECK(back.dataset_path == cfg.dataset_path);
  CHECK(back.output_dir == cfg.output_dir);
  CHECK(back.checkpoint_every == cfg.checkpoint_every);
  CHECK(back.report_format == cfg.report_format);
  CHECK(back.threads == cfg.threads);
  CHECK(back.train.group_size == cfg.train.group_size);
  CHECK(back.train.clip_eps == cfg.train.clip_eps);        // bit-exact
  CHECK(back.train.beta_format == cfg.train.beta_format);  // bit-exact
  CHECK(back.train.beta_kl == cfg.train.beta_kl);          // bit-exact
  CHECK(back.train.learning_rate == cfg.train.learning_rate);
  CHECK(back.train.iterations == cfg.train.iterations);
  CHECK(back.train.inner_epochs == cfg.train.inner_epochs);
  CHECK(back.train.seed == cfg.train.seed);
  CHECK(back.train.std_floor == cfg.train.std_floor);
  CHECK(back.train.max_len == cfg.train.max_len);

  // Serializing the re-parsed struct reproduces the text byte for byte.
  CHECK(serialize_run_config(back) == echo);
}

TEST_CASE("config: errors name the offending key") {
  SUBCASE("unknown key in [run]") {
    try {
      parse_run_config_text(minimal_config_text() + "wheels = x\n");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("run.wheels") != std::string::npos);
    }
  }
  SUBCASE("unknown key in [train]") {
    try {
      parse_run_config_text(minimal_config_text() +
                            "[train]\nlearningrate = 0.5\n");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("train.learningrate") !=
            std::string::npos);
    }
  }
  SUBCASE("unknown section") {
    try {
      parse_run_config_text(minimal_config_text() + "[runtime]\nx = 1\n");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("runtime") != std::string::npos);
    }
  }
  SUBCASE("duplicate key") {
    try {
      parse_run_config_text(minimal_config_text() + "wheel = again.json\n");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("run.wheel") != std::string::npos);
      CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
  }
  SUBCASE("key before any section") {
    CHECK_THROWS_AS(parse_run_config_text("wheel = w.json\n"),
                    ValidationError);
  }
  SUBCASE("non-numeric value") {
    try {
      parse_run_config_text(minimal_config_text() +
                            "[train]\niterations = soon\n");
      FAIL("expected error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("train.iterations") !=
            std::string::npos);
      CHECK(std::string(e.what()).find("soon") != std::string::npos);
    }
  }
  SUBCASE("negative seed") {
    CHECK_THROWS_AS(parse_run_config_text(minimal_config_text() +
                                          "[train]\nseed = -4\n"),
                    ParseError);
  }
  SUBCASE("bad report format") {
    CHECK_THROWS_AS(
        parse_run_config_text(minimal_config_text() + "report_format = xml\n"),
        ValidationError);
  }
  SUBCASE("origin label appears in the message") {
    try {
      parse_run_config_text("junk line\n", "my.ini");
      FAIL("expected error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("my.ini") != std::string::npos);
    }
  }
}

TEST_CASE("config: load-time bounds reject degenerate runs") {
  // learning_rate == 0 is a legal in-process no-op but not a loadable run.
  CHECK_THROWS_AS(parse_run_config_text(minimal_config_text() +
                                        "[train]\nlearning_rate = 0\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_run_config_text(minimal_config_text() +
                                        "[train]\ngroup_size = 1\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_run_config_text(minimal_config_text() +
                                        "threads = 0\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_run_config_text(minimal_config_text() +
                                        "checkpoint_every = -1\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_run_config_text("[run]\nwheel = w\ndataset = d\n"),
                  ValidationError);  // output_dir missing
}

TEST_CASE("config: file loader reports missing files") {
  TempDir tmp;
  CHECK_THROWS_AS(load_run_config(tmp.file("absent.ini")), IoError);
  std::string p = tmp.file("ok.ini");
  {
    std::ofstream out(p);
    out << minimal_config_text();
  }
  RunConfig cfg = load_run_config(p);
  CHECK(cfg.wheel_path == "wheel.json");
}

TEST_CASE("demo: default wheel shape and canonical JSON copy") {
  EmotionWheel w = default_wheel();
  CHECK(w.num_clusters() == 4);
  // Canonical labels only in the vocabulary; synonyms stay metric-side.
  Vocab v = Vocab::from_wheel(w);
  CHECK(v.size() == 6 + 4);
  CHECK(v.index_of("happy") >= 0);
  CHECK(v.index_of("sad") >= 0);
  CHECK(v.index_of("angry") >= 0);
  CHECK(v.index_of("scared") >= 0);
  CHECK(v.index_of("glad") == -1);  // synonym, not a token

  // Synonyms score full cluster credit against their canonical label.
  CHECK(ew_score(LabelSet::from_raw({"glad"}), LabelSet::from_raw({"happy"}),
                 w)
            .score == doctest::Approx(1.0));
  CHECK(ew_score(LabelSet::from_raw({"terrified"}),
                 LabelSet::from_raw({"scared"}), w)
            .score == doctest::Approx(1.0));

  // The checked-in copy of the wheel is exactly what the code generates.
  std::string repo_copy = slurp(std::string(EWRL_SOURCE_DIR) +
                                "/data/default_wheel.json");
  CHECK(default_wheel_json() == repo_copy);
}

TEST_CASE("demo: dataset covers four contexts with cluster-distinct labels") {
  std::vector<Sample> data = make_demo_dataset(3);
  REQUIRE(data.size() == 12);
  std::set<std::string> ids;
  int per_context[4] = {0, 0, 0, 0};
  for (const Sample& s : data) {
    CHECK(ids.insert(s.id).second);
    REQUIRE(s.context >= 0);
    REQUIRE(s.context < 4);
    ++per_context[s.context];
    CHECK(!s.query.empty());
    CHECK(s.gt_labels.size() == 1);
  }
  for (int c = 0; c < 4; ++c) CHECK(per_context[c] == 3);

  // Each context's ground truth maps to a distinct wheel cluster.
  EmotionWheel w = default_wheel();
  std::set<int> clusters;
  for (int c = 0; c < 4; ++c) {
    const Sample& s = data[size_t(c) * 3];
    CHECK(s.context == c);
    int cl = w.cluster_of(s.gt_labels.labels[0]);
    REQUIRE(cl >= 0);
    clusters.insert(cl);
  }
  CHECK(clusters.size() == 4);

  CHECK_THROWS_AS(make_demo_dataset(0), ContractViolation);
}

TEST_CASE("demo: bundle writes wheel, dataset, and loadable config") {
  TempDir tmp;
  std::string config_path = write_demo_bundle(tmp.file("bundle"));
  CHECK(std::filesystem::exists(tmp.file("bundle") + "/wheel.json"));
  CHECK(std::filesystem::exists(tmp.file("bundle") + "/dataset.jsonl"));
  CHECK(config_path == tmp.file("bundle") + "/config.ini");

  RunConfig cfg = load_run_config(config_path);
  CHECK(cfg.train.group_size == 8);
  CHECK(cfg.train.clip_eps == doctest::Approx(0.2));
  CHECK(cfg.train.beta_format == doctest::Approx(0.5));
  CHECK(cfg.train.beta_kl == doctest::Approx(0.01));
  CHECK(cfg.train.learning_rate == doctest::Approx(0.5));
  CHECK(cfg.train.iterations == 500);

  // The bundled wheel file round-trips into the same wheel.
  EmotionWheel w = EmotionWheel::from_json_text(
      slurp(tmp.file("bundle") + "/wheel.json"));
  CHECK(w.num_clusters() == default_wheel().num_clusters());

  // The dataset file loads and matches the generator's shape.
  std::vector<Sample> data = read_dataset(cfg.dataset_path);
  CHECK(data.size() == size_t(demo_samples_per_context()) * 4);
}
