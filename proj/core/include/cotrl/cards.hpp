#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cotrl/rng.hpp"

namespace cotrl {

enum class Rank : std::uint8_t { kAce = 1, k2, k3, k4, k5, k6, k7, k8, k9, k10, kJack, kQueen, kKing };
enum class Suit : std::uint8_t { kSpades, kHearts, kDiamonds, kClubs };

/// How J/Q/K map to numbers: 10 (default) or 11/12/13.
enum class FaceMode : std::uint8_t { kTen, kFace };

struct Card {
  Rank rank = Rank::kAce;
  Suit suit = Suit::kSpades;

  friend bool operator==(const Card&, const Card&) = default;
};

/// Numeric value of a rank: ace is 1, J/Q/K are 10 or 11/12/13.
int card_value(Rank rank, FaceMode mode = FaceMode::kTen);
inline int card_value(const Card& card, FaceMode mode = FaceMode::kTen) { return card_value(card.rank, mode); }

/// Two-character code such as "KS", "7H", "AD"; ten is "TD".
std::string to_string(const Card& card);
std::optional<Card> parse_card(std::string_view code);

/// Uniform over the 52 rank/suit combinations (infinite deck).
Card draw_card(Rng& rng);

}  // namespace cotrl
