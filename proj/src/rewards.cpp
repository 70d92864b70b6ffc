#include "ewrl/rewards.hpp"

#include <array>

#include "ewrl/errors.hpp"

namespace ewrl {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space_ascii(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool contains_any_tag(std::string_view s) {
  constexpr std::array<std::string_view, 4> tags = {kThinkOpen, kThinkClose,
                                                    kAnswerOpen, kAnswerClose};
  for (auto tag : tags) {
    if (s.find(tag) != std::string_view::npos) return true;
  }
  return false;
}

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

StructuredOutput check_format(std::string_view raw) {
  StructuredOutput out;
  out.raw = std::string(raw);

  if (raw.substr(0, kThinkOpen.size()) != kThinkOpen) return out;
  size_t think_end = raw.find(kThinkClose, kThinkOpen.size());
  if (think_end == std::string_view::npos) return out;
  std::string_view think =
      raw.substr(kThinkOpen.size(), think_end - kThinkOpen.size());
  if (contains_any_tag(think)) return out;  // nested/repeated tags

  size_t pos = think_end + kThinkClose.size();
  while (pos < raw.size() && is_space_ascii(raw[pos])) ++pos;  // one ws run

  if (raw.substr(pos, kAnswerOpen.size()) != kAnswerOpen) return out;
  pos += kAnswerOpen.size();
  if (raw.size() < pos + kAnswerClose.size()) return out;
  if (raw.substr(raw.size() - kAnswerClose.size()) != kAnswerClose) return out;
  std::string_view answer =
      raw.substr(pos, raw.size() - kAnswerClose.size() - pos);
  if (contains_any_tag(answer)) return out;  // trailing text or extra tags

  out.think = std::string(think);
  out.answer = std::string(answer);
  out.well_formed = true;
  return out;
}

std::vector<std::string> split_answer_text(std::string_view answer) {
  // Pass 1: commas. Pass 2: standalone (non-word-adjacent) "and", any case.
  std::vector<std::string> comma_pieces;
  size_t start = 0;
  while (true) {
    size_t comma = answer.find(',', start);
    if (comma == std::string_view::npos) {
      comma_pieces.emplace_back(answer.substr(start));
      break;
    }
    comma_pieces.emplace_back(answer.substr(start, comma - start));
    start = comma + 1;
  }

  std::vector<std::string> out;
  for (const std::string& piece : comma_pieces) {
    size_t begin = 0;
    for (size_t i = 0; i + 3 <= piece.size(); ++i) {
      bool word = lower(piece[i]) == 'a' && lower(piece[i + 1]) == 'n' &&
                  lower(piece[i + 2]) == 'd';
      if (!word) continue;
      bool left_ok = (i == 0) || !is_word_char(piece[i - 1]);
      bool right_ok = (i + 3 == piece.size()) || !is_word_char(piece[i + 3]);
      if (left_ok && right_ok) {
        out.push_back(piece.substr(begin, i - begin));
        begin = i + 3;
        i += 2;  // resume after "and"
      }
    }
    out.push_back(piece.substr(begin));
  }
  return out;
}

LabelSet extract_answer(const StructuredOutput& output) {
  if (!output.well_formed) return LabelSet{};
  std::vector<std::string> pieces = split_answer_text(*output.answer);
  return LabelSet::from_raw(pieces);
}

RewardBreakdown combined_reward(std::string_view raw, const LabelSet& gt,
                                const EmotionWheel& wheel, double beta_format) {
  if (beta_format < 0.0) {
    throw ContractViolation("beta_format must be >= 0");
  }
  StructuredOutput parsed = check_format(raw);
  RewardBreakdown r;
  r.beta_format = beta_format;
  r.format = format_reward(parsed);
  r.accuracy = ew_score(extract_answer(parsed), gt, wheel).score;
  r.total = r.accuracy + beta_format * static_cast<double>(r.format);
  return r;
}

std::string format_cold_start_target(std::string_view description,
                                     const LabelSet& labels) {
  if (labels.empty()) {
    throw ContractViolation(
        "cold-start target needs a non-empty label set");
  }
  std::string joined;
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    if (i) joined += ", ";
    joined += labels.labels[i];
  }
  std::string out;
  out.reserve(description.size() + joined.size() + 40);
  out += kThinkOpen;
  out += description;
  out += kThinkClose;
  out += kAnswerOpen;
  out += joined;
  out += kAnswerClose;

  // Prove the postcondition instead of assuming it: tag text inside the
  // description, or separator text inside a label, would render a target
  // the strict checker rejects or one that re-parses to a different set.
  StructuredOutput parsed = check_format(out);
  if (!parsed.well_formed || !(extract_answer(parsed) == labels)) {
    throw ValidationError(
        "cold-start target would not round-trip (tag text in the "
        "description, or separator text in a label)");
  }
  return out;
}

}  // namespace ewrl
