#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotrl/env.hpp"
#include "cotrl/rng.hpp"

namespace cotrl {

class Vocabulary;

/// Raw template text with `<<formula>>` and `<<actions>>` slot markers.
const std::string& prompt_template(TaskId task, bool cot);

/// Fills the task template from the observation. Pure.
std::string build_prompt(const Observation& obs, bool cot = true);

/// Oracle-style response in the SFT data format. `plan` is the solver formula
/// quoted in EZPoints/Points24 thoughts; required there when cot is true.
std::string build_response(const Observation& obs, const ActionLabel& action, bool cot,
                           const std::vector<std::string>* plan = nullptr);

/// `['a', 'b', ...]`
std::string render_action_list(std::span<const ActionLabel> actions);

/// Byte offsets of the value that follows the last `"action"` key that has a
/// `:` separator. The span excludes an opening quote and stops before the
/// closing delimiter.
struct ActionValueSpan {
  std::size_t key_begin = 0;
  std::size_t value_begin = 0;
  std::size_t value_end = 0;
};

std::optional<ActionValueSpan> find_action_value(std::string_view text);

/// Trims whitespace, quotes and braces and lowercases ASCII.
std::string normalize_action_text(std::string_view raw);

struct ParsedAction {
  ActionLabel action;
  bool fallback = false;
};

/// Total over all byte strings: an exact match from `action_space`, or a
/// uniform draw from it with fallback=true.
ParsedAction parse_action(std::string_view text, std::span<const ActionLabel> action_space, Rng& rng);

struct TokenRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool contains(int i) const { return i >= begin && i < end; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

struct Segmentation {
  TokenRange tht;
  TokenRange act;
};

/// Thought tokens run up to the end of the action-key marker; action tokens
/// cover the value. Without a marker everything is thought.
Segmentation segment_utterance(std::span<const int> tokens, const Vocabulary& vocab);

struct Utterance {
  std::vector<int> tokens;  // excludes the begin marker, includes the end marker if emitted
  std::string text;
  TokenRange tht_range;
  TokenRange act_range;
  std::vector<double> token_logps;
  bool truncated = false;  // hit max_tokens before the end marker

  double logp_tht() const;
  double logp_act() const;
};

}  // namespace cotrl
