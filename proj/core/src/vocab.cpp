#include "cotrl/vocab.hpp"

#include <array>
#include <set>

#include "cotrl/gym_cards.hpp"
#include "cotrl/prompting.hpp"

namespace cotrl {

namespace {

// Longest first so that prefixes never shadow a longer match.
constexpr std::array<std::string_view, 14> kSpecialPieces{
    "\"current formula\"", "\"current number\"", "\"target number\"", "\"thoughts\"", "\"formula\"",
    "\"action\"", "\"cards\"", "\"\n}", "\",\n", "],\n", ": \"", ": [", "{\n", "\n}",
};

bool is_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation or invalid byte: take it alone
}

const std::string kEmpty;

Card card_with_value(int v) { return Card{static_cast<Rank>(v), Suit::kSpades}; }

void add_blackjack_corpus(std::set<std::string>& pieces, Observation obs) {
  const std::array<ActionLabel, 2> actions{ActionLabel("stand"), ActionLabel("hit")};
  for (int sum = 4; sum <= 21; ++sum) {
    BlackjackState s;
    if (sum == 21) {
      s.player = {card_with_value(1), card_with_value(13)};
    } else if (sum <= 11) {
      s.player = {card_with_value(2), card_with_value(sum - 2)};
    } else {
      s.player = {card_with_value(10), card_with_value(sum - 10)};
    }
    for (int up = 1; up <= 13; ++up) {
      s.dealer_up = card_with_value(up);
      s.dealer_hole = card_with_value(2);
      obs.symbolic = s;
      for (const auto& a : actions) {
        for (const auto& p : split_pieces(build_response(obs, a, true))) pieces.insert(p);
      }
    }
  }
}

void add_formula_corpus(std::set<std::string>& pieces, Observation obs, const FormulaGameSpec& spec) {
  const auto space = formula_action_space(spec);
  const int max_value = spec.face == FaceMode::kFace ? 13 : 10;
  for (int v = 1; v <= max_value; ++v) {
    FormulaGameState s;
    s.target = spec.target;
    for (int i = 0; i < spec.num_cards; ++i) {
      s.cards.push_back(card_with_value(v));
      s.values.push_back(v);
      s.used.push_back(false);
    }
    const std::string n = std::to_string(v);
    Formula plan;
    if (spec.num_cards == 2) {
      plan = {n, "*", n};
    } else {
      plan = {"(", n, "+", n, ")", "*", "(", n, "-", n, ")", "/", n};
    }
    for (std::size_t len = 0; len <= plan.size(); ++len) {
      s.formula.assign(plan.begin(), plan.begin() + static_cast<std::ptrdiff_t>(len));
      obs.symbolic = s;
      for (const auto& p : split_pieces(build_prompt(obs, true))) pieces.insert(p);
      for (const auto& a : space) {
        for (const auto& p : split_pieces(build_response(obs, a, true, &plan))) pieces.insert(p);
      }
    }
  }
}

}  // namespace

std::vector<std::string> split_pieces(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    for (const auto special : kSpecialPieces) {
      if (text.substr(i, special.size()) == special) {
        out.emplace_back(special);
        i += special.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;

    const std::size_t start = i;
    if (text[i] == ' ' && i + 1 < text.size()) ++i;
    const auto c = static_cast<unsigned char>(text[i]);
    if (start != i && (c == ' ' || c == '\n')) {
      // A run of blanks: emit the first space alone.
      out.emplace_back(" ");
      continue;
    }
    if (is_letter(c)) {
      while (i < text.size() && is_letter(static_cast<unsigned char>(text[i]))) ++i;
    } else if (is_digit(c)) {
      while (i < text.size() && is_digit(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      i = std::min(text.size(), i + utf8_length(c));
    }
    out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> pieces) {
  names_.reserve(pieces.size() + 2);
  names_.emplace_back("<bos>");
  names_.emplace_back("<eos>");
  for (auto& p : pieces) {
    if (p.empty()) throw UsageError("empty vocabulary piece");
    names_.push_back(std::move(p));
  }
  for (int i = 2; i < size(); ++i) {
    if (!index_.emplace(names_[i], i).second) throw UsageError("duplicate vocabulary piece: " + names_[i]);
  }
}

Vocabulary Vocabulary::for_task(TaskId task, const EnvOptions& options) {
  std::set<std::string> pieces;
  for (const char* p : {"\"", ":", ",", "{", "}", "[", "]", "'", " ", "\n"}) pieces.insert(p);

  auto env = make_env(task, options);
  Observation obs = env->reset(0);
  for (bool cot : {true, false}) {
    for (const auto& p : split_pieces(build_prompt(obs, cot))) pieces.insert(p);
  }

  switch (task) {
    case TaskId::kNumberLine: {
      const std::array<ActionLabel, 2> actions{ActionLabel("+"), ActionLabel("-")};
      for (int x = 0; x <= options.n_max; ++x) {
        for (int y = 0; y <= options.n_max; ++y) {
          obs.symbolic = NumberLineState{x, y, options.n_max};
          for (const auto& a : actions) {
            for (bool cot : {true, false}) {
              for (const auto& p : split_pieces(build_response(obs, a, cot))) pieces.insert(p);
            }
          }
        }
      }
      break;
    }
    case TaskId::kBlackjack:
      add_blackjack_corpus(pieces, obs);
      break;
    case TaskId::kEzPoints:
      add_formula_corpus(pieces, obs, ezpoints_spec(options.face));
      break;
    case TaskId::kPoints24:
      add_formula_corpus(pieces, obs, points24_spec(options.face));
      break;
  }
  for (const auto& a : env->action_space()) {
    for (const auto& p : split_pieces(build_response(obs, a, false))) pieces.insert(p);
  }
  return Vocabulary(std::vector<std::string>(pieces.begin(), pieces.end()));
}

const std::string& Vocabulary::piece(int id) const {
  if (id == kBos || id == kEos) return kEmpty;
  return names_.at(id);
}

std::optional<int> Vocabulary::find(std::string_view piece) const {
  const auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::vector<int>> Vocabulary::try_encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& p : split_pieces(text)) {
    const auto id = find(p);
    if (!id) return std::nullopt;
    ids.push_back(*id);
  }
  return ids;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& p : split_pieces(text)) {
    const auto id = find(p);
    if (!id) throw UsageError("text contains a piece outside the vocabulary: '" + p + "'");
    ids.push_back(*id);
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) out += piece(id);
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& n : names_) {
    for (unsigned char c : n) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace cotrl
