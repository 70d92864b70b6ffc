#include "ewrl/run_config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ewrl/errors.hpp"

namespace ewrl {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_uint64(const std::string& where,
                           const std::string& value) {
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0' ||
      value.find('-') != std::string::npos) {
    throw ParseError(where + ": expected an unsigned integer, got \"" +
                     value + "\"");
  }
  return std::uint64_t(v);
}

long long parse_int(const std::string& where, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0') {
    throw ParseError(where + ": expected an integer, got \"" + value + "\"");
  }
  return v;
}

double parse_real(const std::string& where, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (errno != 0 || end == value.c_str() || *end != '\0' ||
      !std::isfinite(v)) {
    throw ParseError(where + ": expected a finite real, got \"" + value +
                     "\"");
  }
  return v;
}

int parse_bounded_int(const std::string& where, const std::string& value,
                      long long lo, long long hi) {
  long long v = parse_int(where, value);
  if (v < lo || v > hi) {
    throw ValidationError(where + ": value " + std::to_string(v) +
                          " out of range [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
  return int(v);
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Keep the echo short when the value round-trips with fewer digits.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

}  // namespace

std::string to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kJson: return "json";
    case ReportFormat::kBoth: return "both";
  }
  throw ContractViolation("unhandled report format");
}

void RunConfig::validate() const {
  if (wheel_path.empty()) throw ValidationError("run.wheel must be set");
  if (dataset_path.empty()) throw ValidationError("run.dataset must be set");
  if (output_dir.empty()) throw ValidationError("run.output_dir must be set");
  if (checkpoint_every < 0) {
    throw ValidationError("run.checkpoint_every must be >= 0");
  }
  if (threads < 1) throw ValidationError("run.threads must be >= 1");
  train.validate();
  if (!(train.learning_rate > 0.0)) {
    throw ValidationError("train.learning_rate must be > 0");
  }
}

RunConfig parse_run_config_text(const std::string& text,
                                const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string section;
  std::set<std::string> seen;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError(where + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "train") {
        throw ValidationError(where + ": unknown section \"" + section +
                              "\"");
      }
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(where + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(where + ": empty key");
    if (section.empty()) {
      throw ValidationError(where + ": key \"" + key +
                            "\" appears before any [section]");
    }
    std::string qual = section + "." + key;
    if (!seen.insert(qual).second) {
      throw ValidationError(where + ": duplicate key \"" + qual + "\"");
    }
    const std::string vw = where + ": " + qual;

    if (section == "run") {
      if (key == "wheel") {
        cfg.wheel_path = value;
      } else if (key == "dataset") {
        cfg.dataset_path = value;
      } else if (key == "output_dir") {
        cfg.output_dir = value;
      } else if (key == "checkpoint_every") {
        cfg.checkpoint_every = parse_bounded_int(vw, value, 0, 1 << 30);
      } else if (key == "report_format") {
        if (value == "csv") {
          cfg.report_format = ReportFormat::kCsv;
        } else if (value == "json") {
          cfg.report_format = ReportFormat::kJson;
        } else if (value == "both") {
          cfg.report_format = ReportFormat::kBoth;
        } else {
          throw ValidationError(where + ": report_format must be one of "
                                        "csv, json, both; got \"" +
                                value + "\"");
        }
      } else if (key == "threads") {
        cfg.threads = parse_bounded_int(vw, value, 1, 4096);
      } else {
        throw ValidationError(where + ": unknown key \"" + qual + "\"");
      }
    } else {  // train
      if (key == "group_size") {
        cfg.train.group_size = parse_bounded_int(vw, value, 0, 1 << 20);
      } else if (key == "clip_eps") {
        cfg.train.clip_eps = parse_real(vw, value);
      } else if (key == "beta_format") {
        cfg.train.beta_format = parse_real(vw, value);
      } else if (key == "beta_kl") {
        cfg.train.beta_kl = parse_real(vw, value);
      } else if (key == "learning_rate") {
        cfg.train.learning_rate = parse_real(vw, value);
      } else if (key == "iterations") {
        cfg.train.iterations = parse_bounded_int(vw, value, 0, 1 << 30);
      } else if (key == "inner_epochs") {
        cfg.train.inner_epochs = parse_bounded_int(vw, value, 0, 1 << 20);
      } else if (key == "seed") {
        cfg.train.seed = parse_uint64(vw, value);
      } else if (key == "std_floor") {
        cfg.train.std_floor = parse_real(vw, value);
      } else if (key == "max_len") {
        cfg.train.max_len = parse_bounded_int(vw, value, 0, 1 << 20);
      } else {
        throw ValidationError(where + ": unknown key \"" + qual + "\"");
      }
    }
  }

  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config file \"" + path + "\"");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str(), path);
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "wheel = " << cfg.wheel_path << "\n";
  out << "dataset = " << cfg.dataset_path << "\n";
  out << "output_dir = " << cfg.output_dir << "\n";
  out << "checkpoint_every = " << cfg.checkpoint_every << "\n";
  out << "report_format = " << to_string(cfg.report_format) << "\n";
  out << "threads = " << cfg.threads << "\n";
  out << "\n[train]\n";
  out << "group_size = " << cfg.train.group_size << "\n";
  out << "clip_eps = " << format_real(cfg.train.clip_eps) << "\n";
  out << "beta_format = " << format_real(cfg.train.beta_format) << "\n";
  out << "beta_kl = " << format_real(cfg.train.beta_kl) << "\n";
  out << "learning_rate = " << format_real(cfg.train.learning_rate) << "\n";
  out << "iterations = " << cfg.train.iterations << "\n";
  out << "inner_epochs = " << cfg.train.inner_epochs << "\n";
  out << "seed = " << cfg.train.seed << "\n";
  out << "std_floor = " << format_real(cfg.train.std_floor) << "\n";
  out << "max_len = " << cfg.train.max_len << "\n";
  return out.str();
}

}  // namespace ewrl
