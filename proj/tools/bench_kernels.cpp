// Benchmark: the OpenMP-parallel kernels against the same work run with a
// single worker. Two kernels are measured:
//
//   1. the training loop's rollout-collection phase (one group per sample
//      per iteration, workers over the frozen snapshot) — timed through
//      train(), which also carries the serial per-sample update phase, so
//      the printed speedup is for the whole loop, not the phase alone;
//   2. evaluate_pairs batch scoring (independent per-item scoring with a
//      serial id-ordered reduction).
//
// Both kernels promise worker-count-independent output; each row verifies
// the single-worker and all-core results are byte-identical before printing
// and the program exits non-zero if they ever diverge.

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "ewrl/demo.hpp"
#include "ewrl/grpo.hpp"
#include "ewrl/ov_metric.hpp"

namespace {

double time_seconds(const std::function<void()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

struct Row {
  std::string kernel;
  std::string work;
  double serial_s = 0.0;
  double parallel_s = 0.0;
  int threads = 1;
  bool identical = false;
};

void print_table(const std::vector<Row>& rows) {
  std::printf("%-28s %-12s %10s %10s %8s %8s  %s\n", "kernel", "work",
              "1-worker", "parallel", "threads", "speedup", "identical");
  for (const Row& r : rows) {
    std::printf("%-28s %-12s %9.3fs %9.3fs %8d %7.2fx  %s\n",
                r.kernel.c_str(), r.work.c_str(), r.serial_s, r.parallel_s,
                r.threads, r.serial_s / r.parallel_s,
                r.identical ? "yes" : "NO");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Timing comparison of the parallel kernels vs a single worker"};
  int train_iterations = 20;
  long eval_items = 200000;
  app.add_option("--train-iterations", train_iterations,
                 "Iterations for the training-loop row")
      ->check(CLI::PositiveNumber);
  app.add_option("--eval-items", eval_items,
                 "Synthetic batch size for the evaluation row")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  const int hw = omp_get_max_threads();
#else
  const int hw = 1;
#endif
  std::vector<Row> rows;
  bool all_identical = true;

  // --- Row 1: training loop (parallel rollout phase) ---
  {
    ewrl::EmotionWheel wheel = ewrl::default_wheel();
    std::vector<ewrl::Sample> dataset =
        ewrl::make_demo_dataset(ewrl::demo_samples_per_context());
    ewrl::TrainConfig cfg = ewrl::demo_train_config();
    cfg.iterations = train_iterations;

    ewrl::TrainOptions serial_opts;
    serial_opts.threads = 1;
    ewrl::TrainOptions parallel_opts;
    parallel_opts.threads = hw;

    std::string serial_csv, parallel_csv;
    Row row;
    row.kernel = "train loop (rollout phase)";
    row.work = std::to_string(dataset.size()) + "x" +
               std::to_string(train_iterations);
    row.threads = hw;
    row.serial_s = time_seconds([&] {
      serial_csv = ewrl::train(dataset, wheel, cfg, serial_opts).trace.to_csv();
    });
    row.parallel_s = time_seconds([&] {
      parallel_csv =
          ewrl::train(dataset, wheel, cfg, parallel_opts).trace.to_csv();
    });
    row.identical = serial_csv == parallel_csv;
    all_identical = all_identical && row.identical;
    rows.push_back(row);
  }

  // --- Row 2: batch evaluation ---
  {
    ewrl::EmotionWheel wheel = ewrl::default_wheel();
    std::vector<std::string> labels = wheel.canonical_labels();

    // Random label subsets on both sides; ids already in sorted order.
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<size_t> pick(0, labels.size() - 1);
    auto random_set = [&](int min_n, int max_n) {
      ewrl::LabelSet s;
      int n = std::uniform_int_distribution<int>(min_n, max_n)(rng);
      for (int i = 0; i < n; ++i) s.labels.push_back(labels[pick(rng)]);
      return s;
    };
    std::vector<ewrl::EvalItem> items(static_cast<size_t>(eval_items));
    char id[32];
    for (long i = 0; i < eval_items; ++i) {
      std::snprintf(id, sizeof id, "s%010ld", i);
      // Predictions may be empty; ground truth must carry at least one label.
      items[static_cast<size_t>(i)] = {id, random_set(0, 3), random_set(1, 3)};
    }

    // Warm the cache once so the first timed run isn't charged for it.
    (void)ewrl::evaluate_pairs(items, wheel, 1);

    std::string serial_json, parallel_json;
    Row row;
    row.kernel = "batch evaluation";
    row.work = std::to_string(eval_items);
    row.threads = hw;
    row.serial_s = time_seconds([&] {
      serial_json = ewrl::evaluate_pairs(items, wheel, 1).to_json_text();
    });
    row.parallel_s = time_seconds([&] {
      parallel_json = ewrl::evaluate_pairs(items, wheel, hw).to_json_text();
    });
    row.identical = serial_json == parallel_json;
    all_identical = all_identical && row.identical;
    rows.push_back(row);
  }

  print_table(rows);
  if (!all_identical) {
    std::fprintf(stderr,
                 "ERROR: a kernel produced different output at different "
                 "worker counts\n");
    return 1;
  }
  return 0;
}
