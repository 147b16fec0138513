#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include "cotrl/env.hpp"

namespace cotrl {

/// One client conversation over newline-delimited JSON. Requests:
///   {"cmd":"reset","task":T,"seed":N[,"cot":B,"n_max":N,"face_values":B,"natural_bonus":B]}
///   {"cmd":"step_action","action":A}
///   {"cmd":"step_text","text":S}
///   {"cmd":"render"[,"image":B]}
///   {"cmd":"spec"}
/// Every response is one line carrying "ok" and the request's "id" (null when
/// absent). Failures set "ok":false and "error":{"code","message"}. See
/// docs/wire.md.
class Session {
 public:
  Session();
  ~Session();
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;

  /// Never throws; always returns exactly one line without the newline.
  std::string handle_line(std::string_view line);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::string base64_encode(std::string_view bytes);

/// Reads requests until end of input; one response line per nonblank line.
void serve_stream(std::istream& in, std::ostream& out);

/// Listens on 127.0.0.1:`port` (0 picks a free port) and serves each
/// connection on its own thread with its own Session. `on_listening` receives
/// the bound port. Returns after `max_connections` connections have finished
/// (0 serves forever).
void serve_tcp(std::uint16_t port, int max_connections = 0,
               const std::function<void(std::uint16_t)>& on_listening = {});

}  // namespace cotrl
