#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ewrl/emotion_wheel.hpp"

namespace ewrl {

// Token inventory: structural tags, separator, then one token per canonical
// wheel label. Index order is fixed and dense.
class Vocab {
 public:
  static Vocab from_wheel(const EmotionWheel& wheel);
  // Arbitrary token list (tests, tiny instances). "<eos>" must be present.
  static Vocab from_tokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& text(int idx) const { return tokens_.at(idx); }
  // -1 when the text is not a token.
  int index_of(const std::string& text) const;

  int eos() const { return eos_; }
  // Structural indices; -1 when the token is absent (tiny test vocabs).
  int think_open() const { return index_of("<think>"); }
  int think_close() const { return index_of("</think>"); }
  int answer_open() const { return index_of("<answer>"); }
  int answer_close() const { return index_of("</answer>"); }
  int separator() const { return index_of(","); }

 private:
  std::vector<std::string> tokens_;
  int eos_ = -1;
};

// Context-conditioned, position-wise independent logits. The desk-scale
// stand-in for the policy network: logits[context, position, token].
struct PolicyParams {
  int num_contexts = 0;
  int max_positions = 0;  // logit rows allocated per context
  int max_len = 0;        // sampling/evaluation cap, <= max_positions
  int vocab_size = 0;
  std::vector<double> logits;  // row-major [context][position][token]

  static PolicyParams zeros(int num_contexts, int max_len, int vocab_size);

  size_t row_offset(int context, int position) const {
    return (static_cast<size_t>(context) * max_positions + position) *
           vocab_size;
  }
  double at(int c, int p, int v) const { return logits[row_offset(c, p) + v]; }
  double& at(int c, int p, int v) { return logits[row_offset(c, p) + v]; }

  // Throws ValidationError if any entry is non-finite or shape is corrupt.
  void validate() const;
};

// One sampled output: context index plus token indices, terminated by the
// first <eos> or by max_len (no tokens follow <eos>).
struct TokenSeq {
  int context = 0;
  std::vector<int> tokens;
  bool operator==(const TokenSeq&) const = default;
};

// Softmax of one logit row (max-subtracted; stable under +-1e3 logits).
// Entries sum to 1 and are strictly positive while the row's logit span is
// below the exp underflow threshold (~745); past it the smallest entries
// round to exactly 0. Use row_log_prob for log-space work — it never does.
std::vector<double> token_distribution(const PolicyParams& params, int context,
                                       int position);

// Log-softmax value of one realized token (same stability guarantees).
double row_log_prob(const PolicyParams& params, int context, int position,
                    int token);

// Ancestral sampling until <eos> or max_len. Deterministic in rng_seed.
TokenSeq sample_sequence(const PolicyParams& params, const Vocab& vocab,
                         int context, std::uint64_t rng_seed);
// Same, drawing from a caller-owned engine (used to chain group sampling).
TokenSeq sample_sequence_with(const PolicyParams& params, const Vocab& vocab,
                              int context, std::mt19937_64& rng);

// Argmax decoding (ties -> lowest index), same termination rule.
TokenSeq greedy_decode(const PolicyParams& params, const Vocab& vocab,
                       int context);

// Sum of per-position log-probabilities of the realized tokens. Finite, <= 0.
double sequence_logprob(const PolicyParams& params, const TokenSeq& seq);

// Analytic d(sequence_logprob)/d(logits): visited rows hold
// onehot(token) - softmax(row); everything else is zero. Same layout as
// params.logits.
std::vector<double> grad_sequence_logprob(const PolicyParams& params,
                                          const TokenSeq& seq);

// Token texts concatenated; separator renders as ", ", <eos> renders as
// nothing (it terminates, it is not content).
std::string detokenize(const Vocab& vocab, const TokenSeq& seq);

// Versioned JSON checkpoint: shape, vocab texts, row-major logits. Exact
// round-trip of every double.
struct Checkpoint {
  PolicyParams params;
  Vocab vocab;
};
void save_checkpoint(const std::string& path, const PolicyParams& params,
                     const Vocab& vocab);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ewrl
