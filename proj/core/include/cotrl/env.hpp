#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cotrl/cards.hpp"
#include "cotrl/formula.hpp"
#include "cotrl/rng.hpp"

namespace cotrl {

/// Misuse of an API contract (stepping a finished episode, unknown action...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class TaskId : std::uint8_t { kNumberLine, kEzPoints, kPoints24, kBlackjack };

std::string_view task_name(TaskId task);
std::optional<TaskId> parse_task(std::string_view name);

/// Canonical action text: nonempty, lowercase, no surrounding whitespace.
class ActionLabel {
 public:
  static std::optional<ActionLabel> make(std::string_view text);
  /// Throws UsageError when `text` is not canonical.
  explicit ActionLabel(std::string_view text);

  const std::string& text() const { return text_; }

  friend bool operator==(const ActionLabel&, const ActionLabel&) = default;
  friend auto operator<=>(const ActionLabel&, const ActionLabel&) = default;

 private:
  struct Trusted {};
  ActionLabel(std::string text, Trusted) : text_(std::move(text)) {}
  std::string text_;
};

std::vector<ActionLabel> make_actions(std::initializer_list<std::string_view> texts);

struct NumberLineState {
  int target = 0;
  int current = 0;
  int n_max = 5;
  friend bool operator==(const NumberLineState&, const NumberLineState&) = default;
};

/// Shared by EZPoints (2 cards, target 12) and Points24 (4 cards, target 24).
struct FormulaGameState {
  std::vector<Card> cards;
  std::vector<int> values;  // card values under the active FaceMode
  std::vector<bool> used;   // per card instance
  Formula formula;
  int target = 12;
  friend bool operator==(const FormulaGameState&, const FormulaGameState&) = default;
};

struct BlackjackState {
  std::vector<Card> player;
  Card dealer_up;
  Card dealer_hole;
  std::vector<Card> dealer_drawn;  // cards drawn after "stand"
  bool player_turn = true;
  friend bool operator==(const BlackjackState&, const BlackjackState&) = default;
};

using SymbolicState = std::variant<NumberLineState, FormulaGameState, BlackjackState>;

/// Human-readable rendering; a pure function of the symbolic state.
std::string render_text(const SymbolicState& state);

struct Observation {
  TaskId task = TaskId::kNumberLine;
  SymbolicState symbolic;
  std::string text_render;
  std::vector<ActionLabel> legal_actions;
  int step_index = 0;
};

/// Diagnostic side channel of a step; rewards never carry side information.
struct StepInfo {
  bool illegal = false;
  bool success = false;
  bool truncated = false;  // ended by the horizon rather than the task
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Result of a pure task transition, before horizon handling.
struct TransitionOutcome {
  double reward = 0.0;
  bool done = false;
  bool illegal = false;
  bool success = false;
};

struct EnvOptions {
  int n_max = 5;                   // NumberLine
  FaceMode face = FaceMode::kTen;  // EZPoints / Points24
  bool natural_bonus = false;      // Blackjack
};

/// Base class for all tasks. Owns two RNG streams split from the reset seed:
/// one for the task dynamics and one reserved for parser fallback draws.
class Env {
 public:
  explicit Env(TaskId task) : task_(task) {}
  virtual ~Env() = default;

  TaskId task() const { return task_; }

  Observation reset(std::uint64_t seed);
  /// Throws UsageError on a finished episode or an action outside the vocabulary.
  StepResult step(const ActionLabel& action);
  Observation observe() const;

  bool done() const { return done_; }
  int step_index() const { return step_; }
  std::uint64_t seed() const { return seed_; }
  Rng& fallback_rng() { return fallback_; }

  virtual int max_steps() const = 0;
  virtual const std::vector<ActionLabel>& action_space() const = 0;
  virtual std::vector<ActionLabel> legal_actions() const { return action_space(); }
  virtual SymbolicState symbolic() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  bool in_action_space(const ActionLabel& action) const;

 protected:
  virtual void on_reset(Rng& dynamics) = 0;
  virtual TransitionOutcome on_step(const ActionLabel& action, Rng& dynamics) = 0;

 private:
  TaskId task_;
  std::uint64_t seed_ = 0;
  Rng dynamics_;
  Rng fallback_;
  int step_ = 0;
  bool done_ = false;
  bool started_ = false;
};

std::unique_ptr<Env> make_env(TaskId task, const EnvOptions& options = {});

}  // namespace cotrl
