#include "cotrl/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

#include "cotrl/evaluate.hpp"
#include "cotrl/features.hpp"
#include "cotrl/prompting.hpp"
#include "cotrl/sft.hpp"

namespace cotrl {

RolloutBuffer collect_rollouts(Env& env, const PolicyParams& params, const Vocabulary& vocab,
                               const TrainConfig& config, Rng& rng, RolloutCursor& cursor, const TokenMask* mask) {
  RolloutBuffer buf;
  const auto capacity = static_cast<std::size_t>(config.buffer_size);
  buf.transitions.reserve(capacity);

  SampleOptions so;
  so.temperature = config.temperature;
  so.max_tokens = config.max_tokens;
  so.mask = mask;

  Observation obs;
  long episode = 0;
  std::uint64_t seed = 0;
  int t = 0;
  double episode_return = 0.0;
  auto start_episode = [&] {
    episode = cursor.next_episode++;
    seed = mix_seed(cursor.seed_base, static_cast<std::uint64_t>(episode));
    obs = env.reset(seed);
    t = 0;
    episode_return = 0.0;
  };
  start_episode();

  while (buf.transitions.size() < capacity) {
    Transition tr;
    tr.feats = observation_features(obs);
    tr.prompt = build_prompt(obs, config.cot);
    tr.obs_text = obs.text_render;
    Utterance u = sample_utterance(params, vocab, tr.feats, rng, so);
    const auto parsed = parse_action(u.text, obs.legal_actions, env.fallback_rng());
    tr.value_old = value(params, tr.feats);
    const StepResult r = env.step(parsed.action);

    tr.tokens = std::move(u.tokens);
    tr.seg = Segmentation{u.tht_range, u.act_range};
    tr.action = parsed.action;
    tr.fallback = parsed.fallback;
    tr.reward = r.reward;
    tr.done = r.done;
    tr.success = r.info.success;
    tr.logp_tht = u.logp_tht();
    tr.logp_act = u.logp_act();
    tr.logp_scaled_old = scaled_action_logprob(tr.logp_tht, tr.logp_act, config.lambda_cot);
    tr.episode = episode;
    tr.t = t;
    tr.env_seed = seed;
    tr.utterance_text = std::move(u.text);
    buf.transitions.push_back(std::move(tr));

    episode_return += r.reward;
    ++t;
    if (r.done) {
      ++buf.episodes_completed;
      buf.episodes_succeeded += r.info.success ? 1 : 0;
      buf.completed_return += episode_return;
      if (buf.transitions.size() < capacity) start_episode();
    } else {
      obs = r.observation;
    }
  }
  buf.bootstrap_value = buf.transitions.back().done ? 0.0 : value(params, observation_features(obs));
  return buf;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                      double bootstrap_value, double gamma, double gae_lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw UsageError("compute_gae inputs must have equal lengths");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * gae_lambda * live * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return out;
}

void apply_gae(RolloutBuffer& buffer, double gamma, double gae_lambda) {
  const std::size_t n = buffer.transitions.size();
  std::vector<double> rewards(n), values(n);
  std::unique_ptr<bool[]> dones(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) {
    rewards[i] = buffer.transitions[i].reward;
    values[i] = buffer.transitions[i].value_old;
    dones[i] = buffer.transitions[i].done;
  }
  const auto g = compute_gae(rewards, values, std::span<const bool>(dones.get(), n), buffer.bootstrap_value, gamma,
                             gae_lambda);
  for (std::size_t i = 0; i < n; ++i) {
    buffer.transitions[i].advantage = g.advantages[i];
    buffer.transitions[i].ret = g.returns[i];
  }
}

void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a = sd > 1e-12 ? (a - mean) / sd : a - mean;
}

double clipped_objective(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoStats ppo_update(PolicyParams& params, Adam& optimizer, const RolloutBuffer& buffer, const TrainConfig& config,
                    double lr, Rng& rng, const PpoItemObserver& observer) {
  const std::vector<double> snapshot = params.data();
  const std::size_t n = buffer.transitions.size();
  const std::size_t mb = static_cast<std::size_t>(config.minibatch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(params.size());

  PpoStats stats;
  long items = 0;
  long clipped = 0;
  bool first_batch = true;
  for (int epoch = 0; epoch < config.ppo_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      const double m = static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double obj_sum = 0.0, vloss_sum = 0.0, ent_sum = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const Transition& tr = buffer.transitions[order[k]];
        BackwardTerms terms;
        terms.lambda = config.lambda_cot;
        terms.value_weight = config.value_coef / m;
        terms.target_value = tr.ret;
        terms.entropy = config.entropy_coef / m;
        double objective = 0.0;
        terms.policy_weight = [&](double lt, double la) {
          const double ratio = std::exp(scaled_action_logprob(lt, la, config.lambda_cot) - tr.logp_scaled_old);
          const double a = tr.advantage;
          objective = clipped_objective(ratio, a, config.clip_eps);
          if (first_batch) stats.first_batch_max_ratio_error = std::max(stats.first_batch_max_ratio_error, std::abs(ratio - 1.0));
          if (observer) observer(ratio, a, objective);
          const bool unclipped = ratio * a <= std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps) * a;
          if (!unclipped) ++clipped;
          return unclipped ? ratio * a / m : 0.0;
        };
        const auto s = backward(params, tr.feats, tr.tokens, tr.seg, terms, grad);
        obj_sum += objective;
        vloss_sum += (s.value - tr.ret) * (s.value - tr.ret);
        ent_sum += s.entropy;
        ++items;
      }
      const double loss = -obj_sum / m + config.value_coef * vloss_sum / m - config.entropy_coef * ent_sum / m;
      bool finite = std::isfinite(loss);
      for (double g : grad) finite = finite && std::isfinite(g);
      if (!finite) {
        params.data() = snapshot;
        throw NonFiniteLoss("non-finite PPO loss at epoch " + std::to_string(epoch) + ", minibatch starting at " +
                            std::to_string(start) + "; parameters restored");
      }
      for (double& g : grad) g = -g;
      clip_grad_norm(grad, config.max_grad_norm);
      optimizer.step(params.data(), grad, lr);
      ++stats.optimizer_steps;
      stats.policy_loss += -obj_sum;
      stats.value_loss += vloss_sum;
      stats.entropy += ent_sum;
      first_batch = false;
    }
  }
  if (items > 0) {
    stats.policy_loss /= static_cast<double>(items);
    stats.value_loss /= static_cast<double>(items);
    stats.entropy /= static_cast<double>(items);
    stats.clip_fraction = static_cast<double>(clipped) / static_cast<double>(items);
  }
  return stats;
}

std::string metrics_csv_header() {
  return "iter,env_steps,success_rate,mean_return,fallback_rate,mean_abs_logp_tht,mean_abs_logp_act,lr,"
         "policy_loss,value_loss,entropy";
}

std::string metrics_csv_row(const IterationMetrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%ld,%.6f,%.6f,%.6f,%.6f,%.6f,%.6e,%.6f,%.6f,%.6f", m.iter, m.env_steps,
                m.success_rate, m.mean_return, m.fallback_rate, m.mean_abs_logp_tht, m.mean_abs_logp_act, m.lr,
                m.policy_loss, m.value_loss, m.entropy);
  return buf;
}

namespace {

TrajectoryRecord to_record(const Transition& tr, const std::string& run_id, TaskId task) {
  TrajectoryRecord r;
  r.run_id = run_id;
  r.episode = tr.episode;
  r.t = tr.t;
  r.task = std::string(task_name(task));
  r.env_seed = tr.env_seed;
  r.obs_text = tr.obs_text;
  r.prompt = tr.prompt;
  r.utterance_text = tr.utterance_text;
  r.parsed_action = tr.action.text();
  r.fallback = tr.fallback;
  r.reward = tr.reward;
  r.done = tr.done;
  r.logp_tht = tr.logp_tht;
  r.logp_act = tr.logp_act;
  r.logp_scaled = tr.logp_scaled_old;
  r.value_pred = tr.value_old;
  return r;
}

}  // namespace

TrainResult train(Env& env, const PolicyParams& initial, const Vocabulary& vocab, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  TrainResult result;
  result.params = initial;
  PolicyParams& params = result.params;
  Adam optimizer(params.size());
  Rng sample_rng(mix_seed(config.seed, 11));
  Rng shuffle_rng(mix_seed(config.seed, 12));
  RolloutCursor cursor{mix_seed(config.seed, 13), 0};
  auto eval_env = env.clone();
  const int eval_episodes = config.resolved_eval_episodes();

  TokenMask mask;
  if (config.constrained_decoding) mask = response_grammar(env.task(), vocab, config.env_options(), config.cot);
  const TokenMask* mask_ptr = config.constrained_decoding ? &mask : nullptr;

  const auto budget = config.total_env_steps;
  int iter = 0;
  while (result.env_steps + config.buffer_size <= budget) {
    const double lr = cosine_lr(iter, config.lr_init, config.lr_final, config.lr_max_steps);
    RolloutBuffer buffer = collect_rollouts(env, params, vocab, config, sample_rng, cursor, mask_ptr);
    result.env_steps += config.buffer_size;
    if (hooks.on_record) {
      for (const auto& tr : buffer.transitions) hooks.on_record(to_record(tr, "rollout", env.task()));
    }

    apply_gae(buffer, config.gamma, config.gae_lambda);
    if (config.normalize_advantages) {
      std::vector<double> adv(buffer.transitions.size());
      for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = buffer.transitions[i].advantage;
      normalize_advantages(adv);
      for (std::size_t i = 0; i < adv.size(); ++i) buffer.transitions[i].advantage = adv[i];
    }
    const PpoStats ppo = ppo_update(params, optimizer, buffer, config, lr, shuffle_rng);
    ++iter;

    PolicyAgentOptions agent_options;
    agent_options.greedy = config.eval_greedy;
    agent_options.temperature = config.temperature;
    agent_options.max_tokens = config.max_tokens;
    agent_options.sample_seed = mix_seed(config.eval_seed, static_cast<std::uint64_t>(iter));
    agent_options.mask = mask_ptr;
    StepObserver observer;
    const std::string eval_run = "eval-" + std::to_string(iter);
    if (hooks.on_eval_record) {
      observer = [&](const StepRecord& s) {
        TrajectoryRecord r;
        r.run_id = eval_run;
        r.episode = s.episode;
        r.t = s.t;
        r.task = std::string(task_name(env.task()));
        r.env_seed = s.env_seed;
        r.obs_text = s.observation->text_render;
        r.prompt = build_prompt(*s.observation, config.cot);
        r.parsed_action = s.decision->action.text();
        r.fallback = s.decision->fallback;
        r.reward = s.result->reward;
        r.done = s.result->done;
        if (s.decision->utterance) {
          const auto& u = *s.decision->utterance;
          r.utterance_text = u.text;
          r.logp_tht = u.logp_tht();
          r.logp_act = u.logp_act();
          r.logp_scaled = scaled_action_logprob(r.logp_tht, r.logp_act, config.lambda_cot);
        }
        r.value_pred = value(params, observation_features(*s.observation));
        hooks.on_eval_record(r);
      };
    }
    const EvalMetrics eval =
        evaluate(*eval_env, policy_agent(params, vocab, agent_options), eval_episodes, config.eval_seed, observer);

    IterationMetrics m;
    m.iter = iter;
    m.env_steps = result.env_steps;
    m.success_rate = eval.success_rate;
    m.mean_return = eval.mean_return;
    double fallbacks = 0.0, abs_tht = 0.0, abs_act = 0.0;
    for (const auto& tr : buffer.transitions) {
      fallbacks += tr.fallback ? 1.0 : 0.0;
      abs_tht += std::abs(tr.logp_tht);
      abs_act += std::abs(tr.logp_act);
    }
    const double n = static_cast<double>(buffer.transitions.size());
    m.fallback_rate = fallbacks / n;
    m.mean_abs_logp_tht = abs_tht / n;
    m.mean_abs_logp_act = abs_act / n;
    m.lr = lr;
    m.policy_loss = ppo.policy_loss;
    m.value_loss = ppo.value_loss;
    m.entropy = ppo.entropy;
    result.metrics.push_back(m);
    result.peak_success_rate = std::max(result.peak_success_rate, m.success_rate);
    if (hooks.on_iteration) hooks.on_iteration(m);
    if (config.stop_success_rate > 0.0 && m.success_rate >= config.stop_success_rate) break;
  }
  return result;
}

}  // namespace cotrl
