#include "cotrl/render.hpp"

#include <array>
#include <cctype>
#include <span>

namespace cotrl {

namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kAdvance = 6;
constexpr int kLineHeight = 10;
constexpr int kMargin = 4;
constexpr int kCardW = 20;
constexpr int kCardH = 26;
constexpr std::uint8_t kPaper = 255;
constexpr std::uint8_t kInk = 0;
constexpr std::uint8_t kTable = 200;

struct Glyph {
  char c;
  std::array<std::uint8_t, kGlyphH> rows;  // bit 4 is the leftmost column
};

// Lowercase letters are drawn with the uppercase shapes.
constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}}, {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}}, {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'*', {0x00, 0x04, 0x15, 0x0E, 0x15, 0x04, 0x00}}, {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}}, {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
};

// Unknown characters draw as a hollow box.
constexpr std::array<std::uint8_t, kGlyphH> kMissing{0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F};

const std::array<std::uint8_t, kGlyphH>* glyph_for(char c) {
  if (c == ' ') return nullptr;
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kFont) {
    if (g.c == up) return &g.rows;
  }
  return &kMissing;
}

class Canvas {
 public:
  Canvas(int w, int h) : r_{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, kPaper)} {}

  void set(int x, int y, std::uint8_t v) {
    if (x < 0 || y < 0 || x >= r_.width || y >= r_.height) return;
    r_.pixels[static_cast<std::size_t>(y) * r_.width + x] = v;
  }

  void fill(int x, int y, int w, int h, std::uint8_t v) {
    for (int j = y; j < y + h; ++j)
      for (int i = x; i < x + w; ++i) set(i, j, v);
  }

  void frame(int x, int y, int w, int h, std::uint8_t v) {
    for (int i = x; i < x + w; ++i) {
      set(i, y, v);
      set(i, y + h - 1, v);
    }
    for (int j = y; j < y + h; ++j) {
      set(x, j, v);
      set(x + w - 1, j, v);
    }
  }

  void text(int x, int y, std::string_view s) {
    for (char c : s) {
      if (const auto* g = glyph_for(c)) {
        for (int row = 0; row < kGlyphH; ++row)
          for (int col = 0; col < kGlyphW; ++col)
            if ((*g)[row] & (0x10 >> col)) set(x + col, y + row, kInk);
      }
      x += kAdvance;
    }
  }

  void card(int x, int y, const Card& c) {
    fill(x, y, kCardW, kCardH, kPaper);
    frame(x, y, kCardW, kCardH, kInk);
    const auto code = to_string(c);
    text(x + 4, y + 4, code.substr(0, 1));
    text(x + 10, y + 15, code.substr(1, 1));
  }

  void hidden_card(int x, int y) {
    fill(x, y, kCardW, kCardH, kInk);
    frame(x + 2, y + 2, kCardW - 4, kCardH - 4, kPaper);
  }

  Raster take() { return std::move(r_); }

 private:
  Raster r_;
};

void draw_card_row(Canvas& canvas, int y, std::span<const Card> cards, bool hide_last) {
  int x = kMargin;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    if (hide_last && i + 1 == cards.size()) {
      canvas.hidden_card(x, y);
    } else {
      canvas.card(x, y, cards[i]);
    }
    x += kCardW + 4;
  }
}

}  // namespace

std::pair<int, int> raster_size(TaskId task) {
  switch (task) {
    case TaskId::kNumberLine: return {160, 32};
    case TaskId::kEzPoints: return {240, 64};
    case TaskId::kPoints24: return {240, 64};
    case TaskId::kBlackjack: return {288, 96};
  }
  return {160, 32};
}

Raster render_image(const Observation& obs) {
  const auto [w, h] = raster_size(obs.task);
  Canvas canvas(w, h);
  int text_y = kMargin;
  if (const auto* f = std::get_if<FormulaGameState>(&obs.symbolic)) {
    canvas.fill(0, 0, w, kCardH + 2 * kMargin, kTable);
    draw_card_row(canvas, kMargin, f->cards, false);
    text_y = kCardH + 3 * kMargin;
  } else if (const auto* b = std::get_if<BlackjackState>(&obs.symbolic)) {
    canvas.fill(0, 0, w, 2 * kCardH + 3 * kMargin, kTable);
    std::vector<Card> dealer{b->dealer_up, b->dealer_hole};
    dealer.insert(dealer.end(), b->dealer_drawn.begin(), b->dealer_drawn.end());
    draw_card_row(canvas, kMargin, dealer, b->player_turn);
    draw_card_row(canvas, kCardH + 2 * kMargin, b->player, false);
    text_y = 2 * kCardH + 4 * kMargin;
  }
  std::size_t start = 0;
  const std::string& s = obs.text_render;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    const auto line = std::string_view(s).substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    canvas.text(kMargin, text_y, line);
    text_y += kLineHeight;
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return canvas.take();
}

std::string to_pgm(const Raster& raster) {
  std::string out = "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(raster.pixels.data()), raster.pixels.size());
  return out;
}

}  // namespace cotrl
