#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ewrl/dataset.hpp"
#include "ewrl/emotion_wheel.hpp"
#include "ewrl/ov_metric.hpp"
#include "ewrl/rewards.hpp"
#include "ewrl/toy_policy.hpp"

namespace ewrl {

// One sampled output with everything the surrogate loss needs.
struct Rollout {
  TokenSeq seq;
  std::string text;  // detokenized output as scored
  RewardBreakdown reward;
  double logprob_theta = 0.0;  // under the live policy (== logprob_old at collection)
  double logprob_old = 0.0;    // under the pre-update snapshot
  double logprob_ref = 0.0;    // under the frozen reference policy
  double advantage = 0.0;
};

// G rollouts for one context, advantages normalized within the group.
struct RolloutGroup {
  int context = 0;
  std::vector<Rollout> rollouts;
};

// Every training hyperparameter. validate() names the offending field.
struct TrainConfig {
  int group_size = 8;          // G, >= 2
  double clip_eps = 0.2;       // in (0,1)
  double beta_format = 0.5;    // >= 0, weight of the format reward
  double beta_kl = 0.01;       // >= 0, weight of the KL penalty
  double learning_rate = 0.5;  // > 0
  int iterations = 500;        // >= 0
  int inner_epochs = 1;        // >= 1, optimization passes per group
  std::uint64_t seed = 0;
  double std_floor = 1e-8;     // > 0, degenerate-group guard
  int max_len = 10;            // >= 1, sequence length cap

  void validate() const;
};

// Group-normalized advantages: A_i = (r_i - mean) / population std; an
// all-(near-)equal group (std < std_floor) yields all zeros.
std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                       double std_floor);

// Non-negative per-sequence KL estimator: with d = logp_ref - logp_theta
// (clamped to |d| <= 60 before exponentiation), returns exp(d) - d - 1.
// Zero exactly at equality. `clamped`, when given, reports whether the
// clamp engaged.
double kl_estimate(double logp_theta, double logp_ref, bool* clamped = nullptr);

// Sample G sequences from the frozen snapshot `params_old`, detokenize,
// score against gt, record log-probs under the snapshot and the reference,
// and fill group-normalized advantages. Deterministic in rng_seed.
RolloutGroup rollout_group(const PolicyParams& params_old,
                           const PolicyParams& params_ref, const Vocab& vocab,
                           int context, const LabelSet& gt,
                           const EmotionWheel& wheel, const TrainConfig& config,
                           std::uint64_t rng_seed);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as PolicyParams::logits
  double mean_kl = 0.0;      // mean per-rollout KL estimate
  int kl_clamp_events = 0;
};

// Clipped-surrogate loss with KL penalty over one group:
//   loss = -(1/G) sum_i [ min(r_i A_i, clip(r_i, 1-eps, 1+eps) A_i)
//                         - beta_kl * kl_i ]
// with the sequence-level ratio r_i = exp(logp_theta_i - logp_old_i). The
// gradient is assembled analytically; the clipped branch contributes zero,
// and ties at the clip boundary take the unclipped branch. All three
// log-probs are recomputed from the tensors passed in. Throws NumericError
// naming the rollout index if any per-rollout term turns non-finite.
LossGrad grpo_loss_and_grad(const RolloutGroup& group,
                            const PolicyParams& params_theta,
                            const PolicyParams& params_old,
                            const PolicyParams& params_ref,
                            const TrainConfig& config);

struct TraceRecord {
  int iteration = 0;       // 1-based, one record per completed iteration
  double mean_reward = 0;  // mean total reward over the iteration's rollouts
  double mean_accuracy = 0;
  double format_rate = 0;
  double mean_kl = 0;      // mean KL estimate over all loss evaluations
  double loss = 0;         // mean loss over the iteration's updates
  double grad_norm = 0;    // mean per-update gradient L2 norm
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  TrainConfig config;               // echoed for provenance
  std::uint64_t kl_clamp_events = 0;
  bool aborted = false;
  std::string abort_reason;

  // Fixed-header CSV; every value printed with round-trip precision.
  std::string to_csv() const;
  // JSON with the config echo in the header plus the abort/clamp metadata
  // the CSV cannot carry.
  std::string to_json_text() const;
};

struct TrainResult {
  PolicyParams params;      // final policy
  PolicyParams ref_params;  // frozen reference (initial snapshot)
  TrainTrace trace;
};

struct TrainOptions {
  int threads = 1;           // rollout-phase workers; <= 0 = runtime default
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::function<void(int iteration, const PolicyParams&)> on_checkpoint;
};

// Full training loop. Initializes the policy to zeros (uniform), freezes it
// as the reference, and per iteration: snapshot theta_old, collect one
// rollout group per sample (parallelizable over the frozen snapshot), then
// for each sample in order run inner_epochs loss/gradient-descent updates.
// Deterministic in config.seed for every thread count. On a non-finite loss
// the run aborts with the completed-iteration trace preserved.
TrainResult train(const std::vector<Sample>& dataset, const EmotionWheel& wheel,
                  const TrainConfig& config,
                  const TrainOptions& options = TrainOptions{});

}  // namespace ewrl
