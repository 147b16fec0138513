#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cotrl/env.hpp"

namespace cotrl {

/// One environment step of a logged run.
struct TrajectoryRecord {
  std::string run_id;
  long episode = 0;
  int t = 0;
  std::string task;
  std::uint64_t env_seed = 0;  // reset seed of this episode
  std::string obs_text;
  std::string prompt;
  std::string utterance_text;
  std::string parsed_action;
  bool fallback = false;
  double reward = 0.0;
  bool done = false;
  double logp_tht = 0.0;
  double logp_act = 0.0;
  double logp_scaled = 0.0;
  double value_pred = 0.0;
};

/// Single-line JSON, no trailing newline.
std::string to_json_line(const TrajectoryRecord& record);
TrajectoryRecord parse_trajectory_line(const std::string& line);
std::vector<TrajectoryRecord> read_trajectories(const std::filesystem::path& path);

class TrajectoryWriter {
 public:
  TrajectoryWriter() = default;
  explicit TrajectoryWriter(const std::filesystem::path& path);
  bool is_open() const { return out_.is_open(); }
  void write(const TrajectoryRecord& record);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

struct ReplayReport {
  long records = 0;
  long episodes = 0;
  long mismatches = 0;
  std::string first_mismatch;
};

/// Re-steps every episode's parsed actions through a fresh environment reset
/// with the recorded seed and compares rewards and done flags exactly.
ReplayReport replay_trajectories(const std::vector<TrajectoryRecord>& records, const EnvOptions& options);

}  // namespace cotrl
