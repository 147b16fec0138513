#include "cotrl/wire.hpp"

#include <json.hpp>

#include "cotrl/prompting.hpp"
#include "cotrl/render.hpp"

namespace cotrl {

namespace {

using nlohmann::json;

struct WireError {
  std::string code;
  std::string message;
};

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

json actions_json(std::span<const ActionLabel> actions) {
  json a = json::array();
  for (const auto& x : actions) a.push_back(x.text());
  return a;
}

template <typename T>
T field(const json& req, const char* key, T fallback) {
  const auto it = req.find(key);
  if (it == req.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw WireError{"bad_request", std::string("field '") + key + "' has the wrong type"};
  }
}

}  // namespace

struct Session::State {
  std::unique_ptr<Env> env;
  bool cot = true;
  Observation obs;

  json observation_json() const {
    return json{{"text", obs.text_render},
                {"prompt", build_prompt(obs, cot)},
                {"legal_actions", actions_json(obs.legal_actions)},
                {"step_index", obs.step_index}};
  }

  Env& require_env() {
    if (!env) throw WireError{"no_episode", "send reset first"};
    return *env;
  }

  json step(const ActionLabel& action) {
    const StepResult r = require_env().step(action);
    obs = r.observation;
    return json{{"reward", r.reward},
                {"done", r.done},
                {"info", {{"illegal", r.info.illegal}, {"success", r.info.success}, {"truncated", r.info.truncated}}},
                {"observation", observation_json()}};
  }

  json handle(const std::string& cmd, const json& req) {
    if (cmd == "reset") {
      const auto task_text = field<std::string>(req, "task", "");
      const auto task = parse_task(task_text);
      if (!task) throw WireError{"bad_request", "unknown task '" + task_text + "'"};
      EnvOptions o;
      o.n_max = field<int>(req, "n_max", 5);
      if (o.n_max < 1 || o.n_max > 20) throw WireError{"bad_request", "n_max must be in [1, 20]"};
      o.face = field<bool>(req, "face_values", false) ? FaceMode::kFace : FaceMode::kTen;
      o.natural_bonus = field<bool>(req, "natural_bonus", false);
      cot = field<bool>(req, "cot", true);
      env = make_env(*task, o);
      obs = env->reset(field<std::uint64_t>(req, "seed", 0));
      return json{{"observation", observation_json()}};
    }
    if (cmd == "step_action") {
      const auto text = field<std::string>(req, "action", "");
      const auto label = ActionLabel::make(text);
      if (!label) throw WireError{"bad_request", "action must be a canonical label"};
      return step(*label);
    }
    if (cmd == "step_text") {
      if (!req.contains("text")) throw WireError{"bad_request", "missing field 'text'"};
      const auto text = field<std::string>(req, "text", "");
      Env& e = require_env();
      if (e.done()) throw WireError{"usage", "episode finished"};
      const auto parsed = parse_action(text, obs.legal_actions, e.fallback_rng());
      json out = step(parsed.action);
      out["parsed_action"] = parsed.action.text();
      out["fallback"] = parsed.fallback;
      return out;
    }
    if (cmd == "render") {
      require_env();
      json out{{"text", obs.text_render}};
      if (field<bool>(req, "image", false)) {
        const Raster r = render_image(obs);
        out["image"] = json{{"format", "pgm"}, {"width", r.width}, {"height", r.height},
                            {"data", base64_encode(to_pgm(r))}};
      }
      return out;
    }
    if (cmd == "spec") {
      Env& e = require_env();
      return json{{"task", std::string(task_name(e.task()))},
                  {"action_space", actions_json(e.action_space())},
                  {"max_steps", e.max_steps()},
                  {"cot", cot},
                  {"prompt_template", prompt_template(e.task(), cot)}};
    }
    throw WireError{"unknown_cmd", "unknown cmd '" + cmd + "'"};
  }
};

Session::Session() : state_(std::make_unique<State>()) {}
Session::~Session() = default;
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;

std::string Session::handle_line(std::string_view line) {
  json id = nullptr;
  auto error = [&](const std::string& code, const std::string& message) {
    return dump(json{{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}});
  };
  try {
    const json req = json::parse(line, nullptr, false);
    if (req.is_discarded()) return error("bad_json", "request is not valid JSON");
    if (!req.is_object()) return error("bad_request", "request must be a JSON object");
    if (const auto it = req.find("id"); it != req.end()) id = *it;
    const auto it = req.find("cmd");
    if (it == req.end() || !it->is_string()) return error("bad_request", "missing string field 'cmd'");
    json out = state_->handle(it->get<std::string>(), req);
    out["id"] = id;
    out["ok"] = true;
    return dump(out);
  } catch (const WireError& e) {
    return error(e.code, e.message);
  } catch (const UsageError& e) {
    return error("usage", e.what());
  } catch (const std::exception& e) {
    return error("internal", e.what());
  }
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (std::uint32_t(std::uint8_t(bytes[i])) << 16) | (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) |
                   std::uint8_t(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t n = std::uint32_t(std::uint8_t(bytes[i])) << 16;
    if (i + 1 < bytes.size()) n |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

}  // namespace cotrl
