#include "cotrl/trajectory.hpp"

#include <map>

#include <json.hpp>

namespace cotrl {

using nlohmann::json;

std::string to_json_line(const TrajectoryRecord& r) {
  json j;
  j["run_id"] = r.run_id;
  j["episode"] = r.episode;
  j["t"] = r.t;
  j["task"] = r.task;
  j["env_seed"] = r.env_seed;
  j["obs_text"] = r.obs_text;
  j["prompt"] = r.prompt;
  j["utterance_text"] = r.utterance_text;
  j["parsed_action"] = r.parsed_action;
  j["fallback"] = r.fallback;
  j["reward"] = r.reward;
  j["done"] = r.done;
  j["logp_tht"] = r.logp_tht;
  j["logp_act"] = r.logp_act;
  j["logp_scaled"] = r.logp_scaled;
  j["value_pred"] = r.value_pred;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

TrajectoryRecord parse_trajectory_line(const std::string& line) {
  const json j = json::parse(line);
  TrajectoryRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.episode = j.at("episode").get<long>();
  r.t = j.at("t").get<int>();
  r.task = j.at("task").get<std::string>();
  r.env_seed = j.at("env_seed").get<std::uint64_t>();
  r.obs_text = j.at("obs_text").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.utterance_text = j.at("utterance_text").get<std::string>();
  r.parsed_action = j.at("parsed_action").get<std::string>();
  r.fallback = j.at("fallback").get<bool>();
  r.reward = j.at("reward").get<double>();
  r.done = j.at("done").get<bool>();
  r.logp_tht = j.at("logp_tht").get<double>();
  r.logp_act = j.at("logp_act").get<double>();
  r.logp_scaled = j.at("logp_scaled").get<double>();
  r.value_pred = j.at("value_pred").get<double>();
  return r;
}

std::vector<TrajectoryRecord> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<TrajectoryRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_trajectory_line(line));
  }
  return out;
}

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
}

void TrajectoryWriter::write(const TrajectoryRecord& record) { out_ << to_json_line(record) << '\n'; }

ReplayReport replay_trajectories(const std::vector<TrajectoryRecord>& records, const EnvOptions& options) {
  // Group by (run_id, episode) preserving step order.
  std::map<std::pair<std::string, long>, std::vector<const TrajectoryRecord*>> episodes;
  for (const auto& r : records) episodes[{r.run_id, r.episode}].push_back(&r);

  ReplayReport report;
  report.records = static_cast<long>(records.size());
  report.episodes = static_cast<long>(episodes.size());
  for (const auto& [key, steps] : episodes) {
    const auto task = parse_task(steps.front()->task);
    if (!task) throw std::runtime_error("unknown task in trajectory: " + steps.front()->task);
    auto env = make_env(*task, options);
    env->reset(steps.front()->env_seed);
    for (const auto* r : steps) {
      const auto result = env->step(ActionLabel(r->parsed_action));
      if (result.reward != r->reward || result.done != r->done) {
        ++report.mismatches;
        if (report.first_mismatch.empty()) {
          report.first_mismatch =
              key.first + " episode " + std::to_string(key.second) + " t " + std::to_string(r->t);
        }
        break;
      }
    }
  }
  return report;
}

}  // namespace cotrl
