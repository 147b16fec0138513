#include "cotrl/gym_cards.hpp"

namespace cotrl {

std::unique_ptr<Env> make_env(TaskId task, const EnvOptions& options) {
  switch (task) {
    case TaskId::kNumberLine: return std::make_unique<NumberLineEnv>(options.n_max);
    case TaskId::kEzPoints: return std::make_unique<FormulaGameEnv>(ezpoints_spec(options.face));
    case TaskId::kPoints24: return std::make_unique<FormulaGameEnv>(points24_spec(options.face));
    case TaskId::kBlackjack: return std::make_unique<BlackjackEnv>(options.natural_bonus);
  }
  throw UsageError("unknown task");
}

}  // namespace cotrl
