#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cotrl/wire.hpp"

namespace cotrl {

namespace {

constexpr std::size_t kMaxLine = 1 << 20;

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r") == std::string_view::npos; }

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const auto n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

void serve_connection(int fd) {
  Session session;
  std::string buffer;
  char chunk[4096];
  bool open = true;
  while (open) {
    const auto n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n', start)) {
      const std::string_view line(buffer.data() + start, nl - start);
      start = nl + 1;
      if (is_blank(line)) continue;
      if (!send_all(fd, session.handle_line(line) + "\n")) {
        open = false;
        break;
      }
    }
    buffer.erase(0, start);
    if (buffer.size() > kMaxLine) {
      // Feed the oversized line through the normal error path and drop it.
      open = open && send_all(fd, session.handle_line("\x01") + "\n");
      buffer.clear();
    }
  }
  ::close(fd);
}

}  // namespace

void serve_stream(std::istream& in, std::ostream& out) {
  Session session;
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    out << session.handle_line(line) << '\n' << std::flush;
  }
}

void serve_tcp(std::uint16_t port, int max_connections, const std::function<void(std::uint16_t)>& on_listening) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listener, 16) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listener);
    throw std::runtime_error("cannot listen on port " + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  std::vector<std::thread> workers;
  for (int accepted = 0; max_connections == 0 || accepted < max_connections;) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    ++accepted;
    workers.emplace_back(serve_connection, fd);
  }
  for (auto& w : workers) w.join();
  ::close(listener);
}

}  // namespace cotrl
