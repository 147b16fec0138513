#include "cotrl/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace cotrl {

namespace {

using nlohmann::json;

template <typename Config, typename Visitor>
void for_each_field(Config& c, Visitor&& v) {
  v("task", c.task);
  v("cot", c.cot);
  v("n_max", c.n_max);
  v("face_values", c.face_values);
  v("natural_bonus", c.natural_bonus);
  v("embed_dim", c.embed_dim);
  v("value_hidden", c.value_hidden);
  v("init_scale", c.init_scale);
  v("init_checkpoint", c.init_checkpoint);
  v("lambda_cot", c.lambda_cot);
  v("gamma", c.gamma);
  v("gae_lambda", c.gae_lambda);
  v("clip_eps", c.clip_eps);
  v("ppo_epochs", c.ppo_epochs);
  v("buffer_size", c.buffer_size);
  v("minibatch_size", c.minibatch_size);
  v("lr_init", c.lr_init);
  v("lr_final", c.lr_final);
  v("lr_max_steps", c.lr_max_steps);
  v("entropy_coef", c.entropy_coef);
  v("value_coef", c.value_coef);
  v("max_grad_norm", c.max_grad_norm);
  v("normalize_advantages", c.normalize_advantages);
  v("temperature", c.temperature);
  v("max_tokens", c.max_tokens);
  v("constrained_decoding", c.constrained_decoding);
  v("total_env_steps", c.total_env_steps);
  v("stop_success_rate", c.stop_success_rate);
  v("eval_episodes", c.eval_episodes);
  v("eval_greedy", c.eval_greedy);
  v("sft_examples", c.sft_examples);
  v("sft_epochs", c.sft_epochs);
  v("sft_lr", c.sft_lr);
  v("sft_minibatch", c.sft_minibatch);
  v("seed", c.seed);
  v("eval_seed", c.eval_seed);
  v("trajectories", c.trajectories);
}

template <typename T>
void read_value(const json& j, const char* key, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ConfigError(std::string(key) + " must be a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ConfigError(std::string(key) + " must be a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw ConfigError(std::string(key) + " must be a number");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned()) throw ConfigError(std::string(key) + " must be a non-negative integer");
  } else {
    if (!j.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
  }
  out = j.get<T>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

TaskId TrainConfig::task_id() const {
  const auto t = parse_task(task);
  if (!t) throw ConfigError("unknown task: " + task);
  return *t;
}

EnvOptions TrainConfig::env_options() const {
  EnvOptions o;
  o.n_max = n_max;
  o.face = face_values ? FaceMode::kFace : FaceMode::kTen;
  o.natural_bonus = natural_bonus;
  return o;
}

int TrainConfig::resolved_eval_episodes() const {
  if (eval_episodes > 0) return eval_episodes;
  return task_id() == TaskId::kBlackjack ? 1000 : 200;
}

void TrainConfig::validate() const {
  task_id();
  require(n_max >= 1 && n_max <= 20, "n_max must be in [1, 20]");
  require(embed_dim >= 1 && value_hidden >= 1, "embed_dim and value_hidden must be positive");
  require(init_scale >= 0.0, "init_scale must be non-negative");
  require(lambda_cot >= 0.0 && lambda_cot <= 1.0, "lambda_cot must be in [0, 1]");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must be in [0, 1]");
  require(clip_eps > 0.0 && clip_eps < 1.0, "clip_eps must be in (0, 1)");
  require(ppo_epochs >= 1, "ppo_epochs must be at least 1");
  require(buffer_size >= 1, "buffer_size must be at least 1");
  require(minibatch_size >= 1 && minibatch_size <= buffer_size, "minibatch_size must be in [1, buffer_size]");
  require(lr_init >= 0.0 && lr_final >= 0.0, "learning rates must be non-negative");
  require(lr_max_steps >= 1, "lr_max_steps must be at least 1");
  require(entropy_coef >= 0.0 && value_coef >= 0.0, "loss coefficients must be non-negative");
  require(max_grad_norm >= 0.0, "max_grad_norm must be non-negative");
  require(temperature > 0.0, "temperature must be positive");
  require(max_tokens >= 1, "max_tokens must be at least 1");
  require(total_env_steps >= 0, "total_env_steps must be non-negative");
  require(stop_success_rate >= 0.0 && stop_success_rate <= 1.0, "stop_success_rate must be in [0, 1]");
  require(eval_episodes >= 0, "eval_episodes must be non-negative");
  require(sft_examples >= 0 && sft_epochs >= 0, "SFT sizes must be non-negative");
  require(sft_lr >= 0.0, "sft_lr must be non-negative");
  require(sft_minibatch >= 1, "sft_minibatch must be at least 1");
  require(trajectories == "rollouts" || trajectories == "eval" || trajectories == "none",
          "trajectories must be one of rollouts, eval, none");
}

TrainConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  TrainConfig c;
  std::size_t known = 0;
  for_each_field(c, [&](const char* key, auto& field) {
    if (const auto it = j.find(key); it != j.end()) {
      read_value(*it, key, field);
      ++known;
    }
  });
  if (known != j.size()) {
    for (const auto& [key, _] : j.items()) {
      bool found = false;
      for_each_field(c, [&](const char* k, auto&) { found = found || key == k; });
      if (!found) throw ConfigError("unknown config key: " + key);
    }
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const TrainConfig& config) {
  json j = json::object();
  TrainConfig copy = config;
  for_each_field(copy, [&](const char* key, auto& field) { j[key] = field; });
  return j.dump(2);
}

double cosine_lr(long step, double lr_init, double lr_final, long max_steps) {
  if (step < 0) throw UsageError("cosine_lr step must be non-negative");
  if (max_steps <= 0) return lr_final;
  const double frac = static_cast<double>(std::min(step, max_steps)) / static_cast<double>(max_steps);
  return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace cotrl
