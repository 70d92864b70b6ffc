#include "ewrl/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ewrl/errors.hpp"

namespace ewrl {

Vocab Vocab::from_wheel(const EmotionWheel& wheel) {
  std::vector<std::string> toks = {"<think>", "</think>", "<answer>",
                                   "</answer>", "<eos>", ","};
  for (const auto& label : wheel.canonical_labels()) {
    toks.push_back(label);
  }
  return from_tokens(std::move(toks));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  std::set<std::string> seen;
  for (const auto& t : tokens) {
    if (!seen.insert(t).second) {
      throw ValidationError("vocabulary has duplicate token \"" + t + "\"");
    }
  }
  v.tokens_ = std::move(tokens);
  v.eos_ = v.index_of("<eos>");
  if (v.eos_ < 0) {
    throw ValidationError("vocabulary must contain \"<eos>\"");
  }
  return v;
}

int Vocab::index_of(const std::string& text) const {
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == text) return static_cast<int>(i);
  }
  return -1;
}

PolicyParams PolicyParams::zeros(int num_contexts, int max_len,
                                 int vocab_size) {
  if (num_contexts < 1 || max_len < 1 || vocab_size < 1) {
    throw ValidationError("policy shape must be positive in every dimension");
  }
  PolicyParams p;
  p.num_contexts = num_contexts;
  p.max_positions = max_len;
  p.max_len = max_len;
  p.vocab_size = vocab_size;
  p.logits.assign(static_cast<size_t>(num_contexts) * max_len * vocab_size,
                  0.0);
  return p;
}

void PolicyParams::validate() const {
  if (num_contexts < 1 || max_positions < 1 || vocab_size < 1 ||
      max_len < 1 || max_len > max_positions) {
    throw ValidationError("policy shape fields are inconsistent");
  }
  if (logits.size() != static_cast<size_t>(num_contexts) * max_positions *
                           vocab_size) {
    throw ValidationError("logit buffer size does not match policy shape");
  }
  for (double x : logits) {
    if (!std::isfinite(x)) {
      throw ValidationError("policy logits contain a non-finite value");
    }
  }
}

namespace {

void check_row(const PolicyParams& p, int context, int position) {
  if (context < 0 || context >= p.num_contexts) {
    throw ContractViolation("context index " + std::to_string(context) +
                            " out of range [0," +
                            std::to_string(p.num_contexts) + ")");
  }
  if (position < 0 || position >= p.max_len) {
    throw ContractViolation("position index " + std::to_string(position) +
                            " out of range [0," + std::to_string(p.max_len) +
                            ")");
  }
}

}  // namespace

std::vector<double> token_distribution(const PolicyParams& params, int context,
                                       int position) {
  check_row(params, context, position);
  const double* row = params.logits.data() + params.row_offset(context, position);
  const int V = params.vocab_size;
  double mx = row[0];
  for (int v = 1; v < V; ++v) mx = std::max(mx, row[v]);
  std::vector<double> out(V);
  double sum = 0.0;
  for (int v = 0; v < V; ++v) {
    out[v] = std::exp(row[v] - mx);
    sum += out[v];
  }
  for (int v = 0; v < V; ++v) out[v] /= sum;
  return out;
}

double row_log_prob(const PolicyParams& params, int context, int position,
                    int token) {
  check_row(params, context, position);
  if (token < 0 || token >= params.vocab_size) {
    throw ContractViolation("token index " + std::to_string(token) +
                            " out of range [0," +
                            std::to_string(params.vocab_size) + ")");
  }
  const double* row = params.logits.data() + params.row_offset(context, position);
  const int V = params.vocab_size;
  double mx = row[0];
  for (int v = 1; v < V; ++v) mx = std::max(mx, row[v]);
  double sum = 0.0;
  for (int v = 0; v < V; ++v) sum += std::exp(row[v] - mx);
  return row[token] - mx - std::log(sum);
}

namespace {

// Inverse-CDF draw over an explicit probability vector. Uses the top 53 bits
// of the engine output so results are identical on every platform.
int draw_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;  // guard against rounding
}

}  // namespace

TokenSeq sample_sequence_with(const PolicyParams& params, const Vocab& vocab,
                              int context, std::mt19937_64& rng) {
  if (vocab.size() != params.vocab_size) {
    throw ContractViolation("vocab size does not match policy vocab_size");
  }
  TokenSeq seq;
  seq.context = context;
  for (int pos = 0; pos < params.max_len; ++pos) {
    std::vector<double> probs = token_distribution(params, context, pos);
    int tok = draw_index(probs, rng);
    seq.tokens.push_back(tok);
    if (tok == vocab.eos()) break;
  }
  return seq;
}

TokenSeq sample_sequence(const PolicyParams& params, const Vocab& vocab,
                         int context, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return sample_sequence_with(params, vocab, context, rng);
}

TokenSeq greedy_decode(const PolicyParams& params, const Vocab& vocab,
                       int context) {
  if (vocab.size() != params.vocab_size) {
    throw ContractViolation("vocab size does not match policy vocab_size");
  }
  TokenSeq seq;
  seq.context = context;
  for (int pos = 0; pos < params.max_len; ++pos) {
    const double* row =
        params.logits.data() + params.row_offset(context, pos);
    int best = 0;
    for (int v = 1; v < params.vocab_size; ++v) {
      if (row[v] > row[best]) best = v;
    }
    seq.tokens.push_back(best);
    if (best == vocab.eos()) break;
  }
  return seq;
}

namespace {

void check_seq(const PolicyParams& params, const TokenSeq& seq) {
  if (seq.context < 0 || seq.context >= params.num_contexts) {
    throw ContractViolation("sequence context index out of range");
  }
  if (seq.tokens.empty() ||
      seq.tokens.size() > static_cast<size_t>(params.max_len)) {
    throw ContractViolation("sequence length must be in [1, max_len]");
  }
  for (int t : seq.tokens) {
    if (t < 0 || t >= params.vocab_size) {
      throw ContractViolation("sequence contains token index " +
                              std::to_string(t) + " outside the vocabulary");
    }
  }
}

}  // namespace

double sequence_logprob(const PolicyParams& params, const TokenSeq& seq) {
  check_seq(params, seq);
  double lp = 0.0;
  for (size_t pos = 0; pos < seq.tokens.size(); ++pos) {
    lp += row_log_prob(params, seq.context, static_cast<int>(pos),
                       seq.tokens[pos]);
  }
  return lp;
}

std::vector<double> grad_sequence_logprob(const PolicyParams& params,
                                          const TokenSeq& seq) {
  check_seq(params, seq);
  std::vector<double> grad(params.logits.size(), 0.0);
  for (size_t pos = 0; pos < seq.tokens.size(); ++pos) {
    std::vector<double> probs =
        token_distribution(params, seq.context, static_cast<int>(pos));
    double* row = grad.data() +
                  params.row_offset(seq.context, static_cast<int>(pos));
    for (int v = 0; v < params.vocab_size; ++v) row[v] = -probs[v];
    row[seq.tokens[pos]] += 1.0;
  }
  return grad;
}

std::string detokenize(const Vocab& vocab, const TokenSeq& seq) {
  std::string out;
  for (int t : seq.tokens) {
    if (t == vocab.eos()) continue;
    if (t == vocab.separator()) {
      out += ", ";
    } else {
      out += vocab.text(t);
    }
  }
  return out;
}

void save_checkpoint(const std::string& path, const PolicyParams& params,
                     const Vocab& vocab) {
  params.validate();
  if (vocab.size() != params.vocab_size) {
    throw ContractViolation("vocab size does not match policy vocab_size");
  }
  nlohmann::json j;
  j["format_version"] = 1;
  j["num_contexts"] = params.num_contexts;
  j["max_positions"] = params.max_positions;
  j["max_len"] = params.max_len;
  j["vocab"] = vocab.tokens();
  j["logits"] = params.logits;
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open checkpoint file \"" + path + "\" for writing");
  }
  out << j.dump() << "\n";
  if (!out) {
    throw IoError("failed writing checkpoint file \"" + path + "\"");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint file \"" + path + "\"");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint file \"" + path +
                     "\" is not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("format_version")) {
    throw ParseError("checkpoint file \"" + path +
                     "\" is missing format_version");
  }
  if (j["format_version"] != 1) {
    throw ValidationError("checkpoint file \"" + path +
                          "\" has unsupported format_version");
  }
  Checkpoint ck;
  try {
    ck.params.num_contexts = j.at("num_contexts").get<int>();
    ck.params.max_positions = j.at("max_positions").get<int>();
    ck.params.max_len = j.at("max_len").get<int>();
    ck.params.logits = j.at("logits").get<std::vector<double>>();
    ck.vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint file \"" + path +
                     "\" has a malformed field: " + e.what());
  }
  ck.params.vocab_size = ck.vocab.size();
  ck.params.validate();
  return ck;
}

}  // namespace ewrl
