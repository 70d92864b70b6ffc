#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ewrl/dataset.hpp"
#include "ewrl/errors.hpp"

using namespace ewrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ewrl_io_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
  static int counter;
};
int TempDir::counter = 0;

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("dataset: round-trip preserves every field") {
  TempDir tmp;
  std::vector<Sample> data = {
      {"s0", 0, "how does the speaker feel?", LabelSet::from_raw({"happy"})},
      {"s1", 2, "tone of the reply", LabelSet::from_raw({"sad", "gloomy"})},
      {"s2", 1, "", LabelSet::from_raw({"angry"})},
  };
  fs::path file = tmp.path / "data.jsonl";
  write_dataset(file.string(), data);
  auto back = read_dataset(file.string());
  REQUIRE(back.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].id == data[i].id);
    CHECK(back[i].context == data[i].context);
    CHECK(back[i].query == data[i].query);
    CHECK(back[i].gt_labels == data[i].gt_labels);
  }
  CHECK(dataset_num_contexts(back) == 3);
}

TEST_CASE("dataset: blank lines are skipped") {
  TempDir tmp;
  fs::path file = tmp.path / "data.jsonl";
  write_text(file,
             "\n{\"id\":\"a\",\"context\":0,\"query\":\"q\","
             "\"labels\":[\"happy\"]}\n\n");
  auto d = read_dataset(file.string());
  REQUIRE(d.size() == 1);
  CHECK(d[0].id == "a");
}

TEST_CASE("dataset: errors name the line and the problem") {
  TempDir tmp;
  fs::path file = tmp.path / "bad.jsonl";

  SUBCASE("malformed json") {
    write_text(file, "{\"id\":\"a\",\"context\":0,\"query\":\"q\","
                     "\"labels\":[\"happy\"]}\nnot json\n");
    try {
      read_dataset(file.string());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
  SUBCASE("duplicate id") {
    write_text(file, "{\"id\":\"a\",\"context\":0,\"query\":\"q\","
                     "\"labels\":[\"happy\"]}\n"
                     "{\"id\":\"a\",\"context\":1,\"query\":\"q\","
                     "\"labels\":[\"sad\"]}\n");
    try {
      read_dataset(file.string());
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      CHECK(msg.find("\"a\"") != std::string::npos);
      CHECK(msg.find("duplicate") != std::string::npos);
    }
  }
  SUBCASE("negative context") {
    write_text(file, "{\"id\":\"a\",\"context\":-2,\"query\":\"q\","
                     "\"labels\":[\"happy\"]}\n");
    CHECK_THROWS_AS(read_dataset(file.string()), ValidationError);
  }
  SUBCASE("empty labels") {
    write_text(file, "{\"id\":\"a\",\"context\":0,\"query\":\"q\","
                     "\"labels\":[]}\n");
    CHECK_THROWS_AS(read_dataset(file.string()), ValidationError);
  }
  SUBCASE("labels that normalize to nothing") {
    write_text(file, "{\"id\":\"a\",\"context\":0,\"query\":\"q\","
                     "\"labels\":[\"  !!  \"]}\n");
    CHECK_THROWS_AS(read_dataset(file.string()), ValidationError);
  }
  SUBCASE("unknown key") {
    write_text(file, "{\"id\":\"a\",\"context\":0,\"query\":\"q\","
                     "\"labels\":[\"happy\"],\"extra\":1}\n");
    try {
      read_dataset(file.string());
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("extra") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_dataset((tmp.path / "nope.jsonl").string()), IoError);
  }
}
