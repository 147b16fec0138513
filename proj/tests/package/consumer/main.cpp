#include <cotrl/env.hpp>
#include <cotrl/oracles.hpp>

int main() {
  auto env = cotrl::make_env(cotrl::TaskId::kNumberLine);
  auto obs = env->reset(7);
  while (!env->done()) obs = env->step(cotrl::numberline_expert(std::get<cotrl::NumberLineState>(obs.symbolic))).observation;
  const auto& s = std::get<cotrl::NumberLineState>(obs.symbolic);
  return s.current == s.target ? 0 : 1;
}
