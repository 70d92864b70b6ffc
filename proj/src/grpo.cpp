#include "ewrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ewrl/errors.hpp"

namespace ewrl {

void TrainConfig::validate() const {
  if (group_size < 2) {
    throw ValidationError("group_size must be >= 2");
  }
  if (!(clip_eps > 0.0) || !(clip_eps < 1.0)) {
    throw ValidationError("clip_eps must lie in (0,1)");
  }
  if (!(beta_format >= 0.0) || !std::isfinite(beta_format)) {
    throw ValidationError("beta_format must be finite and >= 0");
  }
  if (!(beta_kl >= 0.0) || !std::isfinite(beta_kl)) {
    throw ValidationError("beta_kl must be finite and >= 0");
  }
  // learning_rate == 0 is a legal no-op run when constructed in code; config
  // files additionally require > 0 at load time (see run_config).
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be finite and >= 0");
  }
  if (iterations < 0) {
    throw ValidationError("iterations must be >= 0");
  }
  if (inner_epochs < 1) {
    throw ValidationError("inner_epochs must be >= 1");
  }
  if (!(std_floor > 0.0) || !std::isfinite(std_floor)) {
    throw ValidationError("std_floor must be finite and > 0");
  }
  if (max_len < 1) {
    throw ValidationError("max_len must be >= 1");
  }
}

std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                       double std_floor) {
  const size_t G = rewards.size();
  if (G < 2) {
    throw ContractViolation("advantage groups need at least 2 rewards");
  }
  if (!(std_floor > 0.0)) {
    throw ContractViolation("std_floor must be > 0");
  }
  double mean = 0.0;
  for (double r : rewards) {
    if (!std::isfinite(r)) {
      throw ContractViolation("rewards must be finite");
    }
    mean += r;
  }
  mean /= static_cast<double>(G);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(G);  // population variance
  double std = std::sqrt(var);
  std::vector<double> out(G, 0.0);
  if (std < std_floor) {
    return out;  // degenerate group: no preference signal
  }
  for (size_t i = 0; i < G; ++i) out[i] = (rewards[i] - mean) / std;
  return out;
}

double kl_estimate(double logp_theta, double logp_ref, bool* clamped) {
  if (!std::isfinite(logp_theta) || !std::isfinite(logp_ref)) {
    throw ContractViolation("kl_estimate needs finite log-probabilities");
  }
  double d = logp_ref - logp_theta;
  bool hit = false;
  if (d > 60.0) {
    d = 60.0;
    hit = true;
  } else if (d < -60.0) {
    d = -60.0;
    hit = true;
  }
  if (clamped) *clamped = hit;
  // exp(d) - d - 1 via expm1 so the zero at d == 0 is exact.
  return std::expm1(d) - d;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// Independent RNG stream per (run seed, iteration, sample).
std::uint64_t derive_stream_seed(std::uint64_t seed, int iteration,
                                 int sample) {
  std::uint64_t x = splitmix64(
      seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(iteration + 1));
  return splitmix64(
      x + 0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(sample + 1));
}

// Cached per-row softmax statistics. The arithmetic mirrors
// token_distribution/row_log_prob operation for operation, so values read
// through the cache are bit-identical to uncached evaluation.
struct RowStat {
  std::vector<double> probs;
  std::vector<double> cdf;  // running prefix sums of probs
  double mx = 0.0;
  double logsum = 0.0;
};

class PolicyRowCache {
 public:
  void rebuild(const PolicyParams& params, bool with_cdf) {
    params_ = &params;
    with_cdf_ = with_cdf;
    rows_.assign(static_cast<size_t>(params.num_contexts) * params.max_len,
                 RowStat{});
    dirty_.assign(rows_.size(), 1);
  }

  void refresh_all() {
    for (size_t i = 0; i < rows_.size(); ++i) {
      if (dirty_[i]) refresh(i);
    }
  }

  void mark_context_dirty(int context) {
    size_t base = static_cast<size_t>(context) * params_->max_len;
    for (int p = 0; p < params_->max_len; ++p) dirty_[base + p] = 1;
  }

  const RowStat& row(int context, int position) {
    size_t idx = static_cast<size_t>(context) * params_->max_len + position;
    if (dirty_[idx]) refresh(idx);
    return rows_[idx];
  }

  // Read-only access for fully refreshed caches (parallel phase).
  const RowStat& row_fresh(int context, int position) const {
    return rows_[static_cast<size_t>(context) * params_->max_len + position];
  }

  const PolicyParams& params() const { return *params_; }

 private:
  void refresh(size_t idx) {
    int context = static_cast<int>(idx) / params_->max_len;
    int position = static_cast<int>(idx) % params_->max_len;
    const double* row = params_->logits.data() +
                        params_->row_offset(context, position);
    const int V = params_->vocab_size;
    RowStat& rs = rows_[idx];
    rs.probs.resize(V);
    double mx = row[0];
    for (int v = 1; v < V; ++v) mx = std::max(mx, row[v]);
    double sum = 0.0;
    for (int v = 0; v < V; ++v) {
      rs.probs[v] = std::exp(row[v] - mx);
      sum += rs.probs[v];
    }
    for (int v = 0; v < V; ++v) rs.probs[v] /= sum;
    rs.mx = mx;
    rs.logsum = std::log(sum);
    if (with_cdf_) {
      rs.cdf.resize(V);
      double cum = 0.0;
      for (int v = 0; v < V; ++v) {
        cum += rs.probs[v];
        rs.cdf[v] = cum;
      }
    }
    dirty_[idx] = 0;
  }

  const PolicyParams* params_ = nullptr;
  bool with_cdf_ = false;
  std::vector<RowStat> rows_;
  std::vector<std::uint8_t> dirty_;
};

// Log-probability of one realized token through the cache; identical bits to
// row_log_prob on the same parameters.
double cached_token_logprob(const PolicyParams& p, const RowStat& rs,
                            int context, int position, int token) {
  const double* row = p.logits.data() + p.row_offset(context, position);
  return row[token] - rs.mx - rs.logsum;
}

// Inverse-CDF walk matching sample_sequence_with's accumulation exactly.
int draw_from_cdf(const RowStat& rs, std::mt19937_64& rng) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  for (size_t i = 0; i < rs.cdf.size(); ++i) {
    if (u < rs.cdf[i]) return static_cast<int>(i);
  }
  return static_cast<int>(rs.cdf.size()) - 1;
}

// G rollouts over fully refreshed snapshot/reference caches.
RolloutGroup collect_group(const PolicyRowCache& old_cache,
                           const PolicyRowCache& ref_cache, const Vocab& vocab,
                           int context, const LabelSet& gt,
                           const EmotionWheel& wheel, const TrainConfig& config,
                           std::mt19937_64& rng) {
  const PolicyParams& old_params = old_cache.params();
  RolloutGroup group;
  group.context = context;
  group.rollouts.resize(config.group_size);
  std::vector<double> totals(config.group_size);
  for (int g = 0; g < config.group_size; ++g) {
    Rollout& r = group.rollouts[g];
    r.seq.context = context;
    for (int pos = 0; pos < old_params.max_len; ++pos) {
      int tok = draw_from_cdf(old_cache.row_fresh(context, pos), rng);
      r.seq.tokens.push_back(tok);
      if (tok == vocab.eos()) break;
    }
    r.logprob_old = 0.0;
    r.logprob_ref = 0.0;
    for (size_t pos = 0; pos < r.seq.tokens.size(); ++pos) {
      int p = static_cast<int>(pos);
      int tok = r.seq.tokens[pos];
      r.logprob_old += cached_token_logprob(
          old_params, old_cache.row_fresh(context, p), context, p, tok);
      r.logprob_ref += cached_token_logprob(
          ref_cache.params(), ref_cache.row_fresh(context, p), context, p, tok);
    }
    r.logprob_theta = r.logprob_old;  // collection happens on-policy
    r.text = detokenize(vocab, r.seq);
    r.reward = combined_reward(r.text, gt, wheel, config.beta_format);
    totals[g] = r.reward.total;
  }
  std::vector<double> adv = compute_advantages(totals, config.std_floor);
  for (int g = 0; g < config.group_size; ++g) {
    group.rollouts[g].advantage = adv[g];
  }
  return group;
}

// Per-group loss/gradient written into a per-context slice buffer. When
// old_cache/ref_cache are null the rollouts' stored log-probs are used
// (training path; the stored values came from the same cache arithmetic).
struct GroupEval {
  double loss = 0.0;
  double mean_kl = 0.0;
  int kl_clamp_events = 0;
  int rows_used = 0;  // slice rows [0, rows_used) are valid
};

GroupEval eval_group_cached(const RolloutGroup& group,
                            PolicyRowCache& theta_cache,
                            const PolicyRowCache* old_cache,
                            const PolicyRowCache* ref_cache,
                            const TrainConfig& config,
                            std::vector<double>& slice) {
  const PolicyParams& theta = theta_cache.params();
  const int V = theta.vocab_size;
  const int G = static_cast<int>(group.rollouts.size());
  if (G < 2) {
    throw ContractViolation("rollout group must contain at least 2 rollouts");
  }
  GroupEval out;
  for (const Rollout& r : group.rollouts) {
    out.rows_used = std::max(out.rows_used,
                             static_cast<int>(r.seq.tokens.size()));
  }
  slice.assign(static_cast<size_t>(out.rows_used) * V, 0.0);

  const double inv_g = 1.0 / static_cast<double>(G);
  double sum_obj = 0.0;
  double sum_kl = 0.0;
  for (int i = 0; i < G; ++i) {
    const Rollout& r = group.rollouts[i];
    const int ctx = group.context;
    double lp_theta = 0.0;
    for (size_t pos = 0; pos < r.seq.tokens.size(); ++pos) {
      int p = static_cast<int>(pos);
      lp_theta += cached_token_logprob(theta, theta_cache.row(ctx, p), ctx, p,
                                       r.seq.tokens[pos]);
    }
    double lp_old = r.logprob_old;
    double lp_ref = r.logprob_ref;
    if (old_cache) {
      lp_old = 0.0;
      for (size_t pos = 0; pos < r.seq.tokens.size(); ++pos) {
        int p = static_cast<int>(pos);
        lp_old += cached_token_logprob(old_cache->params(),
                                       old_cache->row_fresh(ctx, p), ctx, p,
                                       r.seq.tokens[pos]);
      }
    }
    if (ref_cache) {
      lp_ref = 0.0;
      for (size_t pos = 0; pos < r.seq.tokens.size(); ++pos) {
        int p = static_cast<int>(pos);
        lp_ref += cached_token_logprob(ref_cache->params(),
                                       ref_cache->row_fresh(ctx, p), ctx, p,
                                       r.seq.tokens[pos]);
      }
    }

    const double A = r.advantage;
    const double ratio = std::exp(lp_theta - lp_old);
    double surrogate = 0.0;
    bool unclipped_active = true;
    if (A != 0.0) {
      double clipped_ratio =
          std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
      double unclipped_val = ratio * A;
      double clipped_val = clipped_ratio * A;
      // Ties at the boundary stay on the unclipped branch.
      unclipped_active = unclipped_val <= clipped_val;
      surrogate = unclipped_active ? unclipped_val : clipped_val;
    }

    bool clamped = false;
    double kl = kl_estimate(lp_theta, lp_ref, &clamped);
    if (clamped) ++out.kl_clamp_events;
    double d = std::clamp(lp_ref - lp_theta, -60.0, 60.0);
    double t = std::exp(d);
    double penalty = config.beta_kl * kl;

    // Gradient weight on grad log pi_theta(o_i), loss sign included.
    double w = (unclipped_active && A != 0.0 ? A * ratio : 0.0) -
               config.beta_kl * (1.0 - t);
    if (!std::isfinite(surrogate) || !std::isfinite(penalty) ||
        !std::isfinite(w)) {
      throw NumericError("rollout " + std::to_string(i) +
                         ": non-finite loss term (ratio " +
                         std::to_string(ratio) + ")");
    }

    sum_obj += surrogate - penalty;
    sum_kl += kl;

    const double coeff = -w * inv_g;
    for (size_t pos = 0; pos < r.seq.tokens.size(); ++pos) {
      int p = static_cast<int>(pos);
      const RowStat& rs = theta_cache.row(ctx, p);
      double* row = slice.data() + static_cast<size_t>(p) * V;
      for (int v = 0; v < V; ++v) row[v] += coeff * (-rs.probs[v]);
      row[r.seq.tokens[pos]] += coeff;
    }
  }
  out.loss = -sum_obj * inv_g;
  out.mean_kl = sum_kl * inv_g;
  if (!std::isfinite(out.loss)) {
    throw NumericError("group loss is non-finite");
  }
  return out;
}

void check_same_shape(const PolicyParams& a, const PolicyParams& b,
                      const char* name) {
  if (a.num_contexts != b.num_contexts || a.max_positions != b.max_positions ||
      a.vocab_size != b.vocab_size || a.max_len != b.max_len) {
    throw ContractViolation(std::string("policy tensor shapes disagree: ") +
                            name);
  }
}

}  // namespace

RolloutGroup rollout_group(const PolicyParams& params_old,
                           const PolicyParams& params_ref, const Vocab& vocab,
                           int context, const LabelSet& gt,
                           const EmotionWheel& wheel, const TrainConfig& config,
                           std::uint64_t rng_seed) {
  config.validate();
  check_same_shape(params_old, params_ref, "snapshot vs reference");
  if (vocab.size() != params_old.vocab_size) {
    throw ContractViolation("vocab size does not match policy vocab_size");
  }
  if (context < 0 || context >= params_old.num_contexts) {
    throw ContractViolation("context index out of range");
  }
  PolicyRowCache old_cache, ref_cache;
  old_cache.rebuild(params_old, /*with_cdf=*/true);
  old_cache.refresh_all();
  ref_cache.rebuild(params_ref, /*with_cdf=*/false);
  ref_cache.refresh_all();
  std::mt19937_64 rng(rng_seed);
  return collect_group(old_cache, ref_cache, vocab, context, gt, wheel, config,
                       rng);
}

LossGrad grpo_loss_and_grad(const RolloutGroup& group,
                            const PolicyParams& params_theta,
                            const PolicyParams& params_old,
                            const PolicyParams& params_ref,
                            const TrainConfig& config) {
  config.validate();
  check_same_shape(params_theta, params_old, "theta vs snapshot");
  check_same_shape(params_theta, params_ref, "theta vs reference");
  if (group.context < 0 || group.context >= params_theta.num_contexts) {
    throw ContractViolation("group context index out of range");
  }
  PolicyRowCache theta_cache, old_cache, ref_cache;
  theta_cache.rebuild(params_theta, false);
  old_cache.rebuild(params_old, false);
  old_cache.refresh_all();
  ref_cache.rebuild(params_ref, false);
  ref_cache.refresh_all();

  std::vector<double> slice;
  GroupEval ev = eval_group_cached(group, theta_cache, &old_cache, &ref_cache,
                                   config, slice);
  LossGrad out;
  out.loss = ev.loss;
  out.mean_kl = ev.mean_kl;
  out.kl_clamp_events = ev.kl_clamp_events;
  out.grad.assign(params_theta.logits.size(), 0.0);
  const int V = params_theta.vocab_size;
  for (int p = 0; p < ev.rows_used; ++p) {
    double* dst = out.grad.data() + params_theta.row_offset(group.context, p);
    const double* src = slice.data() + static_cast<size_t>(p) * V;
    for (int v = 0; v < V; ++v) dst[v] = src[v];
  }
  return out;
}

std::string TrainTrace::to_csv() const {
  std::string out =
      "iteration,mean_reward,mean_accuracy,format_rate,mean_kl,loss,"
      "grad_norm\n";
  char buf[256];
  for (const TraceRecord& r : records) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iteration,
                  r.mean_reward, r.mean_accuracy, r.format_rate, r.mean_kl,
                  r.loss, r.grad_norm);
    out += buf;
  }
  return out;
}

std::string TrainTrace::to_json_text() const {
  nlohmann::json j;
  j["config"] = {{"group_size", config.group_size},
                 {"clip_eps", config.clip_eps},
                 {"beta_format", config.beta_format},
                 {"beta_kl", config.beta_kl},
                 {"learning_rate", config.learning_rate},
                 {"iterations", config.iterations},
                 {"inner_epochs", config.inner_epochs},
                 {"seed", config.seed},
                 {"std_floor", config.std_floor},
                 {"max_len", config.max_len}};
  j["kl_clamp_events"] = kl_clamp_events;
  j["aborted"] = aborted;
  j["abort_reason"] = abort_reason;
  j["records"] = nlohmann::json::array();
  for (const TraceRecord& r : records) {
    j["records"].push_back({{"iteration", r.iteration},
                            {"mean_reward", r.mean_reward},
                            {"mean_accuracy", r.mean_accuracy},
                            {"format_rate", r.format_rate},
                            {"mean_kl", r.mean_kl},
                            {"loss", r.loss},
                            {"grad_norm", r.grad_norm}});
  }
  return j.dump(2) + "\n";
}

TrainResult train(const std::vector<Sample>& dataset, const EmotionWheel& wheel,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (dataset.empty()) {
    throw ValidationError("training dataset is empty");
  }
  int num_contexts = 0;
  for (const Sample& s : dataset) {
    if (s.context < 0) {
      throw ValidationError("sample \"" + s.id +
                            "\" has a negative context index");
    }
    if (s.gt_labels.empty()) {
      throw ValidationError("sample \"" + s.id + "\" has no ground-truth labels");
    }
    num_contexts = std::max(num_contexts, s.context + 1);
  }

  Vocab vocab = Vocab::from_wheel(wheel);
  const int S = static_cast<int>(dataset.size());
  const int V = vocab.size();

  TrainResult result;
  result.params = PolicyParams::zeros(num_contexts, config.max_len, V);
  result.ref_params = result.params;  // frozen uniform reference
  result.trace.config = config;

  PolicyRowCache ref_cache;
  ref_cache.rebuild(result.ref_params, false);
  ref_cache.refresh_all();

  PolicyParams theta_old;
  PolicyRowCache old_cache;
  PolicyRowCache theta_cache;
  theta_cache.rebuild(result.params, false);

  std::vector<RolloutGroup> groups(S);
  std::vector<double> slice;

#ifdef _OPENMP
  const int nthreads =
      options.threads > 0 ? options.threads : omp_get_max_threads();
#endif

  for (int it = 0; it < config.iterations && !result.trace.aborted; ++it) {
    theta_old = result.params;  // frozen snapshot for this iteration
    old_cache.rebuild(theta_old, /*with_cdf=*/true);
    old_cache.refresh_all();

    // Rollout phase: every sample reads the same immutable snapshot; each
    // worker writes only its own slot, so any thread count gives identical
    // results.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nthreads)
#endif
    for (int s = 0; s < S; ++s) {
      std::mt19937_64 rng(derive_stream_seed(config.seed, it, s));
      groups[s] = collect_group(old_cache, ref_cache, vocab,
                                dataset[s].context, dataset[s].gt_labels,
                                wheel, config, rng);
    }

    TraceRecord rec;
    rec.iteration = it + 1;
    {
      double sum_total = 0.0, sum_acc = 0.0;
      long formats = 0, n = 0;
      for (const RolloutGroup& g : groups) {
        for (const Rollout& r : g.rollouts) {
          sum_total += r.reward.total;
          sum_acc += r.reward.accuracy;
          formats += r.reward.format;
          ++n;
        }
      }
      rec.mean_reward = sum_total / static_cast<double>(n);
      rec.mean_accuracy = sum_acc / static_cast<double>(n);
      rec.format_rate = static_cast<double>(formats) / static_cast<double>(n);
    }

    // Update phase: strictly ordered over samples, then inner epochs, so the
    // optimization trajectory is one fixed sequence of parameter states.
    double loss_sum = 0.0, kl_sum = 0.0, norm_sum = 0.0;
    long updates = 0;
    for (int s = 0; s < S && !result.trace.aborted; ++s) {
      for (int e = 0; e < config.inner_epochs; ++e) {
        GroupEval ev;
        try {
          ev = eval_group_cached(groups[s], theta_cache, nullptr, nullptr,
                                 config, slice);
        } catch (const NumericError& err) {
          result.trace.aborted = true;
          result.trace.abort_reason = "iteration " + std::to_string(it + 1) +
                                      ", sample \"" + dataset[s].id +
                                      "\": " + err.what();
          break;
        }
        // Max-scaled two-pass norm: plain sum-of-squares overflows to inf
        // for gradient entries past ~1e154 even though the entries (and the
        // parameter update below) are still finite.
        double peak = 0.0;
        for (double x : slice) peak = std::max(peak, std::abs(x));
        double norm = 0.0;
        if (peak > 0.0) {
          double norm_sq = 0.0;
          for (double x : slice) {
            double s = x / peak;
            norm_sq += s * s;
          }
          norm = peak * std::sqrt(norm_sq);
        }

        const int ctx = groups[s].context;
        for (int p = 0; p < ev.rows_used; ++p) {
          double* dst = result.params.logits.data() +
                        result.params.row_offset(ctx, p);
          const double* src = slice.data() + static_cast<size_t>(p) * V;
          for (int v = 0; v < V; ++v) {
            dst[v] -= config.learning_rate * src[v];
          }
        }
        theta_cache.mark_context_dirty(ctx);

        loss_sum += ev.loss;
        kl_sum += ev.mean_kl;
        norm_sum += norm;
        result.trace.kl_clamp_events +=
            static_cast<std::uint64_t>(ev.kl_clamp_events);
        ++updates;
      }
    }
    if (result.trace.aborted) break;  // drop the incomplete iteration

    rec.mean_kl = kl_sum / static_cast<double>(updates);
    rec.loss = loss_sum / static_cast<double>(updates);
    rec.grad_norm = norm_sum / static_cast<double>(updates);
    result.trace.records.push_back(rec);

    if (options.checkpoint_every > 0 && options.on_checkpoint &&
        (it + 1) % options.checkpoint_every == 0) {
      options.on_checkpoint(it + 1, result.params);
    }
  }
  return result;
}

}  // namespace ewrl
