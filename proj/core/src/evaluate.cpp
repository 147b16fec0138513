#include "cotrl/evaluate.hpp"

#include <cmath>
#include <map>
#include <memory>

#include "cotrl/features.hpp"
#include "cotrl/oracles.hpp"
#include "cotrl/prompting.hpp"

namespace cotrl {

std::uint64_t episode_seed(std::uint64_t base, std::uint64_t index) { return mix_seed(base, index); }

Agent policy_agent(const PolicyParams& params, const Vocabulary& vocab, const PolicyAgentOptions& options) {
  struct State {
    Rng rng;
    std::map<std::vector<double>, Utterance> cache;
  };
  auto state = std::make_shared<State>(State{Rng(options.sample_seed), {}});
  return [&params, &vocab, options, state](const Observation& obs, Rng& fallback_rng) {
    const auto feats = observation_features(obs);
    SampleOptions so;
    so.greedy = options.greedy;
    so.temperature = options.temperature;
    so.max_tokens = options.max_tokens;
    so.mask = options.mask;
    Utterance u;
    if (options.greedy) {
      auto it = state->cache.find(feats);
      if (it == state->cache.end()) {
        it = state->cache.emplace(feats, sample_utterance(params, vocab, feats, state->rng, so)).first;
      }
      u = it->second;
    } else {
      u = sample_utterance(params, vocab, feats, state->rng, so);
    }
    const auto parsed = parse_action(u.text, obs.legal_actions, fallback_rng);
    Decision d{parsed.action, parsed.fallback, std::move(u)};
    return d;
  };
}

Agent oracle_agent(TaskId task) {
  return [task](const Observation& obs, Rng&) {
    switch (task) {
      case TaskId::kNumberLine:
        return Decision{numberline_expert(std::get<NumberLineState>(obs.symbolic)), false, std::nullopt};
      case TaskId::kBlackjack:
        return Decision{blackjack_optimal(abstract_state(std::get<BlackjackState>(obs.symbolic))), false,
                        std::nullopt};
      case TaskId::kEzPoints:
      case TaskId::kPoints24: {
        const auto a = formula_expert(std::get<FormulaGameState>(obs.symbolic));
        return Decision{a.value_or(ActionLabel("=")), false, std::nullopt};
      }
    }
    throw UsageError("unknown task");
  };
}

Agent constant_agent(const ActionLabel& action) {
  return [action](const Observation&, Rng&) { return Decision{action, false, std::nullopt}; };
}

Agent random_agent(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const Observation& obs, Rng&) {
    return Decision{obs.legal_actions[rng->uniform_int(obs.legal_actions.size())], false, std::nullopt};
  };
}

EvalMetrics evaluate(Env& env, const Agent& agent, int episodes, std::uint64_t seed, const StepObserver& observer) {
  if (episodes < 1) throw UsageError("evaluate needs at least one episode");
  EvalMetrics m;
  m.episodes = episodes;
  long fallbacks = 0;
  int successes = 0;
  double total_return = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const auto s = episode_seed(seed, static_cast<std::uint64_t>(e));
    Observation obs = env.reset(s);
    bool success = false;
    for (int t = 0; !env.done(); ++t) {
      const Decision d = agent(obs, env.fallback_rng());
      const StepResult r = env.step(d.action);
      if (observer) observer(StepRecord{e, t, s, &obs, &d, &r});
      ++m.steps;
      fallbacks += d.fallback ? 1 : 0;
      total_return += r.reward;
      success = r.info.success;
      obs = r.observation;
    }
    successes += success ? 1 : 0;
  }
  m.success_rate = static_cast<double>(successes) / episodes;
  m.mean_return = total_return / episodes;
  m.fallback_rate = m.steps > 0 ? static_cast<double>(fallbacks) / static_cast<double>(m.steps) : 0.0;
  return m;
}

EvalMetrics evaluate(Env& env, const PolicyParams& params, const Vocabulary& vocab, int episodes, bool greedy,
                     std::uint64_t seed) {
  PolicyAgentOptions o;
  o.greedy = greedy;
  o.sample_seed = mix_seed(seed, 0x5a);
  return evaluate(env, policy_agent(params, vocab, o), episodes, seed);
}

LogpDiagnostic logp_diagnostic(Env& env, const PolicyParams& params, const Vocabulary& vocab, int samples,
                               std::uint64_t seed, double temperature, int max_tokens) {
  if (samples < 1) throw UsageError("logp_diagnostic needs at least one sample");
  LogpDiagnostic d;
  Rng rng(mix_seed(seed, 0x64));
  SampleOptions so;
  so.temperature = temperature;
  so.max_tokens = max_tokens;
  long fallbacks = 0;
  Observation obs;
  std::uint64_t episode = 0;
  bool need_reset = true;
  while (d.samples < samples) {
    if (need_reset) obs = env.reset(episode_seed(seed, episode++));
    const auto u = sample_utterance(params, vocab, observation_features(obs), rng, so);
    const double tht = u.logp_tht();
    const double act = u.logp_act();
    d.mean_logp_tht += tht;
    d.mean_logp_act += act;
    d.mean_abs_logp_tht += std::abs(tht);
    d.mean_abs_logp_act += std::abs(act);
    ++d.samples;
    const auto parsed = parse_action(u.text, obs.legal_actions, env.fallback_rng());
    fallbacks += parsed.fallback ? 1 : 0;
    const auto r = env.step(parsed.action);
    obs = r.observation;
    need_reset = r.done;
  }
  const double n = d.samples;
  d.mean_logp_tht /= n;
  d.mean_logp_act /= n;
  d.mean_abs_logp_tht /= n;
  d.mean_abs_logp_act /= n;
  d.fallback_rate = static_cast<double>(fallbacks) / n;
  return d;
}

}  // namespace cotrl
