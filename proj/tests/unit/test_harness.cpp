#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cotrl/config.hpp"
#include "cotrl/evaluate.hpp"
#include "cotrl/features.hpp"
#include "cotrl/oracles.hpp"
#include "cotrl/render.hpp"
#include "cotrl/rl.hpp"
#include "cotrl/trajectory.hpp"
#include "cotrl/wire.hpp"

using namespace cotrl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

Observation nl_obs(int x, int y) {
  Observation o;
  o.task = TaskId::kNumberLine;
  o.symbolic = NumberLineState{x, y, 5};
  o.text_render = render_text(o.symbolic);
  o.legal_actions = make_actions({"-", "+"});
  return o;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COTRL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cotrl_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("evaluate: oracle and baselines") {
  auto nl = make_env(TaskId::kNumberLine);
  const auto m = evaluate(*nl, oracle_agent(TaskId::kNumberLine), 200, 1);
  CHECK(m.success_rate == 1.0);
  CHECK(m.episodes == 200);
  CHECK(m.fallback_rate == 0.0);

  auto bj = make_env(TaskId::kBlackjack);
  const auto oracle = evaluate(*bj, oracle_agent(TaskId::kBlackjack), 20000, 2);
  const auto stand = evaluate(*bj, constant_agent(ActionLabel("stand")), 20000, 2);
  CHECK(stand.success_rate < oracle.success_rate);

  auto ez = make_env(TaskId::kEzPoints);
  CHECK(evaluate(*ez, oracle_agent(TaskId::kEzPoints), 200, 3).success_rate == 1.0);

  TrainConfig c;
  CHECK(c.resolved_eval_episodes() == 200);
  c.task = "blackjack";
  CHECK(c.resolved_eval_episodes() == 1000);
  c.eval_episodes = 17;
  CHECK(c.resolved_eval_episodes() == 17);
}

TEST_CASE("evaluate is reproducible and observes every step") {
  auto env = make_env(TaskId::kBlackjack);
  long seen = 0;
  const auto a = evaluate(*env, random_agent(4), 300, 9, [&](const StepRecord&) { ++seen; });
  const auto b = evaluate(*env, random_agent(4), 300, 9);
  CHECK(a.success_rate == b.success_rate);
  CHECK(a.mean_return == b.mean_return);
  CHECK(seen == a.steps);
}

TEST_CASE("render: pure, fixed size, golden") {
  const auto img = render_image(nl_obs(3, 0));
  CHECK(fnv1a(render_image(nl_obs(3, 0)).pixels) == fnv1a(img.pixels));
  CHECK(img.width == 160);
  CHECK(img.height == 32);
  CHECK(fnv1a(img.pixels) == 0xc612aec891580ad8ull);  // golden, frozen
  const auto pgm = to_pgm(img);
  CHECK(pgm.rfind("P5\n160 32\n255\n", 0) == 0);
  CHECK(pgm.size() == 14 + 160 * 32);

  for (auto t : {TaskId::kNumberLine, TaskId::kEzPoints, TaskId::kPoints24, TaskId::kBlackjack}) {
    auto env = make_env(t);
    const auto [w, h] = raster_size(t);
    Rng rng(1);
    for (std::uint64_t s = 0; s < 20; ++s) {
      auto obs = env->reset(s);
      for (int k = 0; k < 3; ++k) {
        const auto r = render_image(obs);
        CHECK(r.width == w);
        CHECK(r.height == h);
        CHECK(r.pixels.size() == static_cast<std::size_t>(w * h));
        const auto legal = env->legal_actions();
        const auto res = env->step(legal[rng.uniform_int(legal.size())]);
        if (res.done) break;
        obs = res.observation;
      }
    }
  }
}

TEST_CASE("wire: worked examples") {
  Session s;
  auto r = json::parse(s.handle_line(R"({"cmd":"reset","task":"blackjack","seed":1,"id":7})"));
  CHECK(r["ok"] == true);
  CHECK(r["id"] == 7);
  CHECK(r["observation"]["legal_actions"] == json::array({"stand", "hit"}));
  CHECK(r["observation"]["prompt"].get<std::string>().find("blackjack") != std::string::npos);

  bool done = false;
  for (int i = 0; i < 30 && !done; ++i) {
    r = json::parse(s.handle_line(R"({"cmd":"step_text","text":"{\"thoughts\": \"x\", \"action\": \"hit\"}"})"));
    REQUIRE(r["ok"] == true);
    CHECK(r["parsed_action"] == "hit");
    CHECK(r["fallback"] == false);
    CHECK(r.contains("reward"));
    done = r["done"].get<bool>();
  }
  REQUIRE(done);
  r = json::parse(s.handle_line(R"({"cmd":"step_action","action":"hit"})"));
  CHECK(r["ok"] == false);
  CHECK(r["error"]["message"] == "episode finished");
  CHECK(r["id"].is_null());

  r = json::parse(s.handle_line(R"({"cmd":"launch"})"));
  CHECK(r["error"]["code"] == "unknown_cmd");
  r = json::parse(s.handle_line(R"({"cmd":"reset","task":"numberline","seed":3,"extra":1})"));
  CHECK(r["ok"] == true);
  r = json::parse(s.handle_line(R"({"cmd":"render","image":true})"));
  CHECK(r["image"]["format"] == "pgm");
  CHECK(r["image"]["width"] == 160);

  Session fresh;
  r = json::parse(fresh.handle_line(R"({"cmd":"step_action","action":"+"})"));
  CHECK(r["error"]["code"] == "no_episode");
}

TEST_CASE("wire: base64") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("wire: malformed lines each yield one error response") {
  std::mt19937_64 gen(2024);
  const std::vector<std::string> seeds = {
      R"({"cmd":"reset","task":"numberline","seed":1})", R"({"cmd":"step_text","text":"+"})",
      R"({"cmd":"render"})", R"({"cmd":"spec"})", R"([1,2,3])", R"({"cmd":7})"};
  Session s;
  int errors = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    std::string line = seeds[gen() % seeds.size()];
    const int edits = 1 + static_cast<int>(gen() % 6);
    for (int e = 0; e < edits && !line.empty(); ++e) {
      const auto pos = gen() % line.size();
      switch (gen() % 3) {
        case 0: line[pos] = static_cast<char>(gen() % 256); break;
        case 1: line.erase(pos, 1); break;
        default: line.insert(pos, 1, static_cast<char>(gen() % 256)); break;
      }
    }
    // Guarantee malformed JSON so every line must be an error.
    line = "\x02" + line;
    const auto resp = s.handle_line(line);
    CHECK(resp.find('\n') == std::string::npos);
    const auto j = json::parse(resp);
    if (j["ok"] == false && j.contains("error")) ++errors;
  }
  CHECK(errors == n);
}

TEST_CASE("wire: golden transcript") {
  std::ifstream in(fs::path(COTRL_DOCS_DIR) / "wire_transcript.jsonl");
  REQUIRE(in.good());
  Session s;
  std::string req, expected;
  int pairs = 0;
  while (std::getline(in, req) && std::getline(in, expected)) {
    REQUIRE(req.rfind("> ", 0) == 0);
    REQUIRE(expected.rfind("< ", 0) == 0);
    CHECK(s.handle_line(req.substr(2)) == expected.substr(2));
    ++pairs;
  }
  CHECK(pairs >= 5);
}

TEST_CASE("wire: stream server") {
  std::istringstream in("{\"cmd\":\"spec\"}\n\n{\"cmd\":\"reset\",\"task\":\"ezpoints\",\"seed\":2}\nnot json\n");
  std::ostringstream out;
  serve_stream(in, out);
  std::istringstream lines(out.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 3);
}

TEST_CASE("config round trip and validation") {
  TrainConfig c;
  c.task = "points24";
  c.lambda_cot = 0.3;
  c.seed = 99;
  const auto text = serialize_config(c);
  CHECK(serialize_config(parse_config(text)) == text);
  CHECK_THROWS_AS(parse_config(R"({"lamda_cot":0.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"lambda_cot":1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"task":"poker"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"buffer_size":"big"})"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1]"), ConfigError);
  CHECK(parse_config("{}").lambda_cot == 0.5);
}

TEST_CASE("trajectory records round trip and replay") {
  TrainConfig c;
  c.task = "blackjack";
  c.embed_dim = 8;
  c.value_hidden = 4;
  c.buffer_size = 64;
  c.minibatch_size = 32;
  c.ppo_epochs = 1;
  c.total_env_steps = 128;
  c.eval_episodes = 20;
  c.max_tokens = 24;
  const auto vocab = Vocabulary::for_task(c.task_id());
  const auto p = PolicyParams::init({vocab.size(), 8, feature_dim(c.task_id()), 4}, 2, 0.3);
  std::vector<TrajectoryRecord> rollouts, evals;
  TrainHooks hooks;
  hooks.on_record = [&](const TrajectoryRecord& r) { rollouts.push_back(r); };
  hooks.on_eval_record = [&](const TrajectoryRecord& r) { evals.push_back(r); };
  auto env = make_env(c.task_id());
  train(*env, p, vocab, c, hooks);
  CHECK(rollouts.size() == 128);

  std::set<std::tuple<std::string, long, int>> keys;
  for (const auto& r : rollouts) keys.emplace(r.run_id, r.episode, r.t);
  CHECK(keys.size() == rollouts.size());

  for (const auto* set : {&rollouts, &evals}) {
    const auto report = replay_trajectories(*set, c.env_options());
    CHECK(report.mismatches == 0);
    CHECK(report.records == static_cast<long>(set->size()));
  }

  for (const auto& r : rollouts) {
    const auto line = to_json_line(r);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(to_json_line(parse_trajectory_line(line)) == line);
  }

  auto tampered = rollouts;
  tampered[0].reward += 1.0;
  CHECK(replay_trajectories(tampered, c.env_options()).mismatches > 0);
}

TEST_CASE("CLI exit codes and outputs") {
  const auto dir = scratch("cli");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("no-such-command") == 2);
  {
    std::ofstream(dir / "bad.json") << R"({"task":"numberline","unknown":1})";
  }
  CHECK(run_cli("--config " + (dir / "bad.json").string() + " eval") == 2);
  CHECK(run_cli("--config " + (dir / "missing.json").string() + " eval") == 2);

  {
    std::ofstream(dir / "gen.json") << R"({"task":"numberline","sft_examples":20})";
  }
  CHECK(run_cli("--config " + (dir / "gen.json").string() + " --out " + (dir / "gen").string() + " sft-gen") == 0);
  const auto data = read_file(dir / "gen" / "sft.jsonl");
  CHECK(std::count(data.begin(), data.end(), '\n') == 20);
}

TEST_CASE("eval with the shipped checkpoint") {
  const auto dir = scratch("eval");
  const auto ckpt = fs::path(COTRL_CHECKPOINT_DIR) / "numberline_sft.bin";
  REQUIRE(fs::exists(ckpt));
  {
    json cfg = {{"task", "numberline"}, {"init_checkpoint", ckpt.string()}};
    std::ofstream(dir / "c.json") << cfg.dump();
  }
  const std::string cmd = std::string(COTRL_CLI_PATH) + " --config " + (dir / "c.json").string() + " --out " +
                          (dir / "out").string() + " eval 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  CHECK(pclose(pipe) == 0);
  CHECK(out.find("success_rate=") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "metrics.csv"));
}
