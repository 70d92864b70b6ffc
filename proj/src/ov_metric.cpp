#include "ewrl/ov_metric.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ewrl/errors.hpp"

namespace ewrl {

LabelSet LabelSet::from_raw(std::span<const std::string> raw) {
  LabelSet out;
  std::set<std::string> seen;
  for (const auto& r : raw) {
    std::string n = normalize_label(r);
    if (n.empty()) continue;
    if (seen.insert(n).second) out.labels.push_back(std::move(n));
  }
  return out;
}

LabelSet LabelSet::from_raw(std::initializer_list<std::string> raw) {
  std::vector<std::string> v(raw);
  return from_raw(std::span<const std::string>(v));
}

MetricReport ew_score(const LabelSet& pred, const LabelSet& gt,
                      const EmotionWheel& wheel) {
  if (gt.empty()) {
    throw ContractViolation("ground-truth label set must be non-empty");
  }
  std::vector<int> pred_ids, gt_ids;
  pred_ids.reserve(pred.size());
  gt_ids.reserve(gt.size());

  MetricReport rep;
  std::set<std::string> unmatched_seen;
  auto resolve = [&](const std::string& label, std::vector<int>& ids) {
    int c = wheel.cluster_of(label);
    ids.push_back(c);
    if (c == EmotionWheel::kUnmatched && unmatched_seen.insert(label).second) {
      rep.unmatched_labels.push_back(label);
    }
  };
  for (const auto& l : pred.labels) resolve(l, pred_ids);
  for (const auto& l : gt.labels) resolve(l, gt_ids);

  std::set<int> pred_clusters(pred_ids.begin(), pred_ids.end());
  std::set<int> gt_clusters(gt_ids.begin(), gt_ids.end());
  pred_clusters.erase(EmotionWheel::kUnmatched);
  gt_clusters.erase(EmotionWheel::kUnmatched);

  for (int c : pred_ids) {
    if (c != EmotionWheel::kUnmatched && gt_clusters.count(c)) ++rep.matched_pred;
  }
  for (int c : gt_ids) {
    if (c != EmotionWheel::kUnmatched && pred_clusters.count(c)) ++rep.matched_gt;
  }
  rep.precision =
      pred.empty() ? 0.0
                   : static_cast<double>(rep.matched_pred) /
                         static_cast<double>(pred.size());
  rep.recall = static_cast<double>(rep.matched_gt) /
               static_cast<double>(gt.size());
  rep.score = (rep.precision + rep.recall) / 2.0;
  return rep;
}

namespace {

nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["score"] = r.score;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["matched_pred"] = r.matched_pred;
  j["matched_gt"] = r.matched_gt;
  j["unmatched_labels"] = r.unmatched_labels;
  return j;
}

}  // namespace

std::string BatchReport::to_json_text() const {
  nlohmann::json j;
  j["aggregate"] = report_to_json(aggregate);
  j["per_sample"] = nlohmann::json::array();
  for (const auto& s : per_sample) {
    nlohmann::json e = report_to_json(s.report);
    e["id"] = s.id;
    j["per_sample"].push_back(e);
  }
  return j.dump(2) + "\n";
}

BatchReport evaluate_pairs(std::vector<EvalItem> items,
                           const EmotionWheel& wheel, int threads) {
  std::sort(items.begin(), items.end(),
            [](const EvalItem& a, const EvalItem& b) { return a.id < b.id; });

  BatchReport out;
  out.per_sample.resize(items.size());

#ifdef _OPENMP
  int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (long i = 0; i < static_cast<long>(items.size()); ++i) {
    out.per_sample[i] = {items[i].id,
                         ew_score(items[i].pred, items[i].gt, wheel)};
  }
#else
  (void)threads;
  for (size_t i = 0; i < items.size(); ++i) {
    out.per_sample[i] = {items[i].id,
                         ew_score(items[i].pred, items[i].gt, wheel)};
  }
#endif

  // Serial reduction in id order so the aggregate is bit-stable.
  std::set<std::string> unmatched_seen;
  for (const auto& s : out.per_sample) {
    out.aggregate.score += s.report.score;
    out.aggregate.precision += s.report.precision;
    out.aggregate.recall += s.report.recall;
    out.aggregate.matched_pred += s.report.matched_pred;
    out.aggregate.matched_gt += s.report.matched_gt;
    for (const auto& u : s.report.unmatched_labels) {
      if (unmatched_seen.insert(u).second) {
        out.aggregate.unmatched_labels.push_back(u);
      }
    }
  }
  if (!out.per_sample.empty()) {
    double n = static_cast<double>(out.per_sample.size());
    out.aggregate.score /= n;
    out.aggregate.precision /= n;
    out.aggregate.recall /= n;
  }
  return out;
}

std::vector<std::pair<std::string, LabelSet>> read_label_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open label file \"" + path + "\"");
  }
  std::vector<std::pair<std::string, LabelSet>> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed JSON line: " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        !j.contains("labels") || !j["labels"].is_array()) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected an object with string \"id\" and array "
                       "\"labels\"");
    }
    std::string id = j["id"].get<std::string>();
    if (!seen.insert(id).second) {
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": duplicate sample id \"" + id + "\"");
    }
    std::vector<std::string> raw;
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": sample \"" +
                         id + "\" has a non-string label");
      }
      raw.push_back(l.get<std::string>());
    }
    out.emplace_back(std::move(id), LabelSet::from_raw(raw));
  }
  return out;
}

BatchReport batch_evaluate(const std::string& predictions_path,
                           const std::string& references_path,
                           const EmotionWheel& wheel, int threads) {
  auto preds = read_label_file(predictions_path);
  auto refs = read_label_file(references_path);

  std::map<std::string, LabelSet> pred_by_id;
  for (auto& [id, ls] : preds) pred_by_id.emplace(std::move(id), std::move(ls));

  std::vector<EvalItem> items;
  items.reserve(refs.size());
  for (auto& [id, gt] : refs) {
    if (gt.empty()) {
      throw ValidationError("reference sample \"" + id +
                            "\" has an empty label set");
    }
    auto it = pred_by_id.find(id);
    if (it == pred_by_id.end()) {
      throw ValidationError("predictions file is missing sample id \"" + id +
                            "\"");
    }
    items.push_back({id, std::move(it->second), std::move(gt)});
    pred_by_id.erase(it);
  }
  if (!pred_by_id.empty()) {
    throw ValidationError("predictions file has sample id \"" +
                          pred_by_id.begin()->first +
                          "\" absent from the references file");
  }
  return evaluate_pairs(std::move(items), wheel, threads);
}

}  // namespace ewrl
