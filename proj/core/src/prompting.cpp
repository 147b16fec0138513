#include "cotrl/prompting.hpp"

#include <algorithm>
#include <map>

#include "cotrl/gym_cards.hpp"
#include "cotrl/vocab.hpp"

namespace cotrl {

namespace detail {
const std::map<std::string, std::string, std::less<>>& prompt_resources();
}

namespace {

constexpr std::string_view kFormulaSlot = "<<formula>>";
constexpr std::string_view kActionsSlot = "<<actions>>";
constexpr std::string_view kTenNote = "Note that 'J', 'Q', and 'K' count as '10'.";
constexpr std::string_view kFaceNote = "Note that 'J', 'Q', and 'K' count as '11', '12', and '13'.";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string numberline_thoughts(const NumberLineState& s, const ActionLabel& action) {
  const bool up = action.text() == "+";
  std::string out = "The current number is " + std::to_string(s.current) + ", which is ";
  out += s.current < s.target ? "smaller" : "larger";
  out += " than the target number is " + std::to_string(s.target) + ". ";
  out += "To move the current number closer to the target, I should ";
  out += up ? "increase" : "decrease";
  out += " the current number by choosing " + action.text() + ".";
  return out;
}

std::string blackjack_thoughts(const BlackjackState& s, const ActionLabel& action) {
  const int player = hand_value(s.player).total;
  const int dealer_value = card_value(s.dealer_up.rank, FaceMode::kTen);
  const int dealer = dealer_value == 1 ? 11 : dealer_value;
  return "I have " + std::to_string(player) + " points and the dealer has " + std::to_string(dealer) +
         " points. I think I should " + action.text() + ".";
}

std::string formula_thoughts(const FormulaGameState& s, const ActionLabel& action, const Formula& plan) {
  const std::string current = formula_compact(s.formula);
  const std::string since = "since '" + formula_compact(plan) + "=" + std::to_string(s.target) + "'";
  if (action.text() == "=") {
    return "'" + current + "' is a complete formula, " + since + ", I should output '='";
  }
  return "'" + current + "' is an incomplete formula, " + since + ", I should append '" + action.text() +
         "' to the current formula";
}

}  // namespace

const std::string& prompt_template(TaskId task, bool cot) {
  const std::string key = std::string(task_name(task)) + (cot ? "_cot" : "_nocot");
  const auto& resources = detail::prompt_resources();
  const auto it = resources.find(key);
  if (it == resources.end()) throw UsageError("missing prompt template " + key);
  return it->second;
}

std::string render_action_list(std::span<const ActionLabel> actions) {
  std::string out = "[";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i > 0) out += ", ";
    out += "'" + actions[i].text() + "'";
  }
  return out + "]";
}

std::string build_prompt(const Observation& obs, bool cot) {
  std::string text = prompt_template(obs.task, cot);
  while (!text.empty() && text.back() == '\n') text.pop_back();
  if (const auto* f = std::get_if<FormulaGameState>(&obs.symbolic)) {
    replace_all(text, kFormulaSlot, formula_compact(f->formula));
    const bool face = std::any_of(obs.legal_actions.begin(), obs.legal_actions.end(),
                                  [](const ActionLabel& a) { return a.text() == "11"; });
    if (face) replace_all(text, kTenNote, kFaceNote);
  }
  replace_all(text, kActionsSlot, render_action_list(obs.legal_actions));
  return text;
}

std::string build_response(const Observation& obs, const ActionLabel& action, bool cot, const Formula* plan) {
  const std::string action_line = "\"action\": \"" + action.text() + "\"\n}";
  if (!cot) return "{\n" + action_line;

  std::string out = "{\n";
  if (const auto* nl = std::get_if<NumberLineState>(&obs.symbolic)) {
    out += "\"current number\": \"" + std::to_string(nl->current) + "\",\n";
    out += "\"target number\": \"" + std::to_string(nl->target) + "\",\n";
    out += "\"thoughts\": \"" + numberline_thoughts(*nl, action) + "\",\n";
  } else if (const auto* bj = std::get_if<BlackjackState>(&obs.symbolic)) {
    out += "\"thoughts\": \"" + blackjack_thoughts(*bj, action) + "\",\n";
  } else {
    const auto& f = std::get<FormulaGameState>(obs.symbolic);
    if (plan == nullptr) throw UsageError("formula responses with thoughts need a solver plan");
    out += "\"cards\": [";
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (i > 0) out += ", ";
      out += std::to_string(f.values[i]);
    }
    out += "],\n";
    out += "\"formula\": \"" + formula_compact(f.formula) + "\",\n";
    out += "\"thoughts\": \"" + formula_thoughts(f, action, *plan) + "\",\n";
  }
  return out + action_line;
}

std::optional<ActionValueSpan> find_action_value(std::string_view text) {
  constexpr std::string_view kKey = "\"action\"";
  std::size_t search_end = text.size();
  while (true) {
    const std::size_t key = text.rfind(kKey, search_end);
    if (key == std::string_view::npos) return std::nullopt;
    std::size_t p = key + kKey.size();
    while (p < text.size() && is_space(text[p])) ++p;
    if (p < text.size() && text[p] == ':') {
      ++p;
      while (p < text.size() && is_space(text[p])) ++p;
      ActionValueSpan span;
      span.key_begin = key;
      if (p < text.size() && text[p] == '"') {
        span.value_begin = p + 1;
        const std::size_t close = text.find('"', span.value_begin);
        span.value_end = close == std::string_view::npos ? text.size() : close;
      } else {
        span.value_begin = p;
        const std::size_t close = text.find_first_of(",}\n\"", p);
        span.value_end = close == std::string_view::npos ? text.size() : close;
      }
      return span;
    }
    if (key == 0) return std::nullopt;
    search_end = key - 1;
  }
}

std::string normalize_action_text(std::string_view raw) {
  constexpr std::string_view kTrim = " \t\r\n\"'{}";
  const std::size_t b = raw.find_first_not_of(kTrim);
  if (b == std::string_view::npos) return {};
  const std::size_t e = raw.find_last_not_of(kTrim);
  std::string out(raw.substr(b, e - b + 1));
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

ParsedAction parse_action(std::string_view text, std::span<const ActionLabel> action_space, Rng& rng) {
  if (action_space.empty()) throw UsageError("parse_action needs a nonempty action space");
  if (const auto span = find_action_value(text)) {
    const std::string value =
        normalize_action_text(text.substr(span->value_begin, span->value_end - span->value_begin));
    for (const auto& a : action_space) {
      if (a.text() == value) return {a, false};
    }
  }
  const auto pick = rng.uniform_int(action_space.size());
  return {action_space[pick], true};
}

Segmentation segment_utterance(std::span<const int> tokens, const Vocabulary& vocab) {
  const int n = static_cast<int>(tokens.size());
  std::string text;
  std::vector<std::size_t> starts(tokens.size());
  for (int i = 0; i < n; ++i) {
    starts[i] = text.size();
    text += vocab.piece(tokens[i]);
  }
  Segmentation seg;
  const auto span = find_action_value(text);
  if (!span) {
    seg.tht = {0, n};
    seg.act = {n, n};
    return seg;
  }
  int k = 0;
  while (k < n && starts[k] < span->value_begin) ++k;
  int m = k;
  while (m < n && starts[m] < span->value_end && !vocab.piece(tokens[m]).empty()) ++m;
  seg.tht = {0, k};
  seg.act = {k, m};
  return seg;
}

double Utterance::logp_tht() const {
  double s = 0.0;
  for (int i = tht_range.begin; i < tht_range.end; ++i) s += token_logps.at(i);
  return s;
}

double Utterance::logp_act() const {
  double s = 0.0;
  for (int i = act_range.begin; i < act_range.end; ++i) s += token_logps.at(i);
  return s;
}

}  // namespace cotrl
