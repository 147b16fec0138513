#include "cotrl/cards.hpp"

#include <array>

namespace cotrl {
namespace {

constexpr std::string_view kRankChars = "A23456789TJQK";
constexpr std::string_view kSuitChars = "SHDC";

}  // namespace

int card_value(Rank rank, FaceMode mode) {
  const int r = static_cast<int>(rank);
  if (r <= 10) return r;
  return mode == FaceMode::kFace ? r : 10;
}

std::string to_string(const Card& card) {
  std::string out(2, ' ');
  out[0] = kRankChars[static_cast<int>(card.rank) - 1];
  out[1] = kSuitChars[static_cast<int>(card.suit)];
  return out;
}

std::optional<Card> parse_card(std::string_view code) {
  if (code.size() != 2) return std::nullopt;
  const auto r = kRankChars.find(code[0]);
  const auto s = kSuitChars.find(code[1]);
  if (r == std::string_view::npos || s == std::string_view::npos) return std::nullopt;
  return Card{static_cast<Rank>(r + 1), static_cast<Suit>(s)};
}

Card draw_card(Rng& rng) {
  const auto idx = rng.uniform_int(52);
  return Card{static_cast<Rank>(idx % 13 + 1), static_cast<Suit>(idx / 13)};
}

}  // namespace cotrl
