// Copyright 2026 The tokenshap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tokenshap/bridge.h"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "tokenshap/error.h"

namespace tokenshap {

namespace bridge_io {
namespace {

int remaining_ms(std::chrono::steady_clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
      deadline - std::chrono::steady_clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

void wait_ready(int fd, short events, std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return;
    if (rc == 0) throw Error(Errc::kAdapterFailure, "bridge: request timed out");
    if (errno != EINTR) {
      throw Error(Errc::kAdapterFailure, std::string("bridge: poll failed: ") +
                                             std::strerror(errno));
    }
  }
}

}  // namespace

void send_line(int fd, const std::string& line,
               std::chrono::steady_clock::time_point deadline) {
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    wait_ready(fd, POLLOUT, deadline);
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off,
                             MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      throw Error(Errc::kAdapterFailure, std::string("bridge: write failed: ") +
                                             std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string read_line(int fd, std::string& buffer,
                      std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return line;
    }
    wait_ready(fd, POLLIN, deadline);
    char chunk[8192];
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), MSG_DONTWAIT);
    if (n == 0) throw Error(Errc::kAdapterFailure, "bridge: worker closed the connection");
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      throw Error(Errc::kAdapterFailure, std::string("bridge: read failed: ") +
                                             std::strerror(errno));
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace bridge_io

namespace {

nlohmann::json parse_reply(const std::string& line) {
  try {
    auto j = nlohmann::json::parse(line);
    if (!j.is_object() || !j.contains("op") || !j["op"].is_string()) {
      throw Error(Errc::kAdapterFailure, "bridge: reply without 'op'");
    }
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kAdapterFailure, std::string("bridge: malformed reply: ") + e.what());
  }
}

void terminate(pid_t pid) {
  ::kill(-pid, SIGKILL);
  ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
}

}  // namespace

std::unique_ptr<BridgeAdapter> BridgeAdapter::launch(const std::string& command,
                                                     const BridgeOptions& options) {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw Error(Errc::kAdapterFailure, "bridge: socketpair failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw Error(Errc::kAdapterFailure, "bridge: fork failed");
  }
  if (pid == 0) {
    // Own process group, so a kill also reaches anything the shell spawned.
    ::setpgid(0, 0);
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // also from the parent, so the group exists before any kill
  ::close(fds[1]);
  const int fd = fds[0];

  std::string buffer;
  nlohmann::json reply;
  try {
    const auto deadline = std::chrono::steady_clock::now() + options.timeout;
    bridge_io::send_line(fd, R"({"op":"handshake"})", deadline);
    reply = parse_reply(bridge_io::read_line(fd, buffer, deadline));
    if (reply["op"] != "handshake") {
      throw Error(Errc::kAdapterFailure, "bridge: expected handshake reply, got " + reply.dump());
    }
    Dimension dim{options.dimension_name,
                  reply.at("classes").get<std::vector<std::string>>()};
    dim.validate();
    if (options.expected_classes && *options.expected_classes != dim.classes) {
      throw Error(Errc::kAdapterFailure, "bridge: worker classes do not match the dimension");
    }
    const OutputMode mode = parse_output_mode(reply.at("output_mode").get<std::string>());
    const std::string model = reply.value("model", std::string("bridge"));
    return std::unique_ptr<BridgeAdapter>(new BridgeAdapter(
        model, std::move(dim), mode, pid, fd, std::move(buffer), options));
  } catch (const nlohmann::json::exception& e) {
    ::close(fd);
    terminate(pid);
    throw Error(Errc::kAdapterFailure, std::string("bridge: bad handshake: ") + e.what());
  } catch (...) {
    ::close(fd);
    terminate(pid);
    throw;
  }
}

BridgeAdapter::BridgeAdapter(std::string name, Dimension dim, OutputMode mode, pid_t pid,
                             int fd, std::string pending, BridgeOptions options)
    : ModelAdapter(std::move(name), std::move(dim), mode),
      pid_(pid),
      fd_(fd),
      buffer_(std::move(pending)),
      options_(std::move(options)) {}

BridgeAdapter::~BridgeAdapter() {
  if (pid_ <= 0) return;
  try {
    const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    bridge_io::send_line(fd_, R"({"op":"shutdown"})", deadline);
    // Give the worker until the deadline to drain and exit on its own.
    for (;;) {
      int status = 0;
      const pid_t rc = ::waitpid(pid_, &status, WNOHANG);
      if (rc == pid_ || (rc < 0 && errno != EINTR)) {
        pid_ = -1;
        break;
      }
      if (std::chrono::steady_clock::now() >= deadline) break;
      ::usleep(2000);
    }
  } catch (const Error&) {
  }
  kill_worker();
}

void BridgeAdapter::kill_worker() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    terminate(pid_);
    pid_ = -1;
  }
}

std::vector<ScoreVector> BridgeAdapter::do_predict(std::span<const MaskedInput> inputs) {
  std::vector<std::size_t> all(inputs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (!alive()) throw AdapterError("bridge: worker is not running", all);

  const std::int64_t id = next_id_++;
  nlohmann::ordered_json request;
  request["op"] = "predict";
  request["id"] = id;
  auto& texts = request["texts"] = nlohmann::ordered_json::array();
  for (const MaskedInput& in : inputs) {
    texts.push_back(render_masked_text(in, options_.mask_style));
  }

  nlohmann::json reply;
  try {
    const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    bridge_io::send_line(fd_, request.dump(), deadline);
    reply = parse_reply(bridge_io::read_line(fd_, buffer_, deadline));
  } catch (const Error& e) {
    kill_worker();
    throw AdapterError(e.what(), all);
  }

  if (reply["op"] == "error") {
    // The worker stays usable after reporting a model failure.
    throw AdapterError("bridge: worker error: " + reply.value("message", std::string()), all);
  }
  try {
    if (reply["op"] != "predict" || reply.at("id").get<std::int64_t>() != id) {
      throw Error(Errc::kAdapterFailure, "bridge: reply out of sequence: " + reply.dump());
    }
    auto rows = reply.at("probs").get<std::vector<std::vector<double>>>();
    std::vector<ScoreVector> out;
    out.reserve(rows.size());
    for (auto& row : rows) out.push_back(ScoreVector{std::move(row)});
    return out;
  } catch (const nlohmann::json::exception& e) {
    kill_worker();
    throw AdapterError(std::string("bridge: malformed predict reply: ") + e.what(), all);
  } catch (const Error& e) {
    kill_worker();
    throw AdapterError(e.what(), all);
  }
}

}  // namespace tokenshap
