#include "safenav/session.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "json_io.h"
#include "safenav/errors.h"

namespace safenav {

Session::Session(std::shared_ptr<const Planner> planner, SessionOptions options)
    : planner_(std::move(planner)),
      options_([&] {
        options.episode.record_trajectories = true;
        return options;
      }()),
      episode_(planner_, options_.episode, "remote"),
      vis_(planner_->nav().vis),
      fallback_(random_obstacle(options_.seed)) {}

std::vector<std::string> Session::open() { return turn(); }

std::vector<std::string> Session::turn() const {
  const Environment& env = planner_->env();
  if (episode_.finished()) {
    return {json{{"type", "episode_end"},
                 {"tick", episode_.tick()},
                 {"outcome", outcome_json(episode_.trace().outcome)},
                 {"fallback_moves", fallbacks_}}
                .dump()};
  }
  const NavState& s = episode_.state();
  const Cell observer = s.observer();
  json cells = json::array();
  for (const Cell& c : belief_cells(s.belief, observer, env, vis_)) cells.push_back(cell_json(c));
  json belief = belief_json(s.belief);
  belief["observer"] = cell_json(observer);
  belief["cells"] = cells;
  json visible = json::array();
  for (int i = 0; i < env.cell_count(); ++i) {
    if (vis_(s.robot, env.cell_at(i))) visible.push_back(cell_json(env.cell_at(i)));
  }
  json goals = json::array();
  for (const Cell& g : env.goals) goals.push_back(cell_json(g));
  const Outcome& o = episode_.trace().outcome;
  json update{{"type", "state_update"},
              {"tick", episode_.tick()},
              {"robot", {{"cell", cell_json(s.robot)}, {"heading", to_string(s.heading)}, {"moved", s.moved}}},
              {"obstacle", cell_json(episode_.obstacle())},
              {"belief", belief},
              {"belief_trace", belief_trace_line(episode_.tick(), s.robot, s.belief, observer, env, vis_)},
              {"visible", visible},
              {"goals", goals},
              {"goal_visits", o.goal_visits},
              {"stall", episode_.stall()},
              {"stall_bound", options_.episode.stall_bound}};
  if (has_last_) update["last_move"] = {{"cell", cell_json(last_move_)}, {"fallback", last_fallback_}};
  json moves = json::array();
  for (const Cell& c : episode_.legal_moves()) moves.push_back(cell_json(c));
  return {update.dump(), json{{"type", "legal_moves"}, {"tick", episode_.tick()}, {"moves", moves}}.dump()};
}

std::string Session::reject(const std::string& reason, const Cell* cell) const {
  return json{{"type", "reject"},
              {"tick", episode_.tick()},
              {"cell", cell ? cell_json(*cell) : json(nullptr)},
              {"reason", reason}}
      .dump();
}

std::vector<std::string> Session::receive(const std::string& line) {
  if (ended_) return {};
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception&) {
    return {reject("malformed message: not JSON", nullptr)};
  }
  if (!msg.is_object() || msg.value("type", "") != "move") return {reject("malformed message: expected a move", nullptr)};
  const json& c = msg.contains("cell") ? msg["cell"] : json();
  if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer()) {
    return {reject("malformed message: cell must be [x, y]", nullptr)};
  }
  const Cell cell{c[0].get<int>(), c[1].get<int>()};
  if (msg.contains("tick") && msg["tick"] != episode_.tick()) return {reject("stale tick", &cell)};
  if (const auto reason = episode_.reject_reason(cell)) return {reject(*reason, &cell)};
  return play(cell, false);
}

std::vector<std::string> Session::time_out() {
  if (ended_) return {};
  ++fallbacks_;
  return play(fallback_->choose(episode_.view()), true);
}

std::vector<std::string> Session::play(Cell move, bool fallback) {
  episode_.advance(move);
  has_last_ = true;
  last_move_ = move;
  last_fallback_ = fallback;
  std::vector<std::string> out;
  const SimulationTrace& t = episode_.trace();
  const std::size_t k0 = episode_.keyframes_before_last(), s0 = episode_.steps_before_last();
  const std::size_t count = t.keyframes.size() - k0;
  for (std::size_t i = 0; i < count; ++i) {
    json chunk{{"type", "trajectory_chunk"},
               {"tick", t.keyframes[k0 + i].tick},
               {"index", i},
               {"count", count},
               {"keyframe", keyframe_json(t.keyframes[k0 + i])}};
    json segments = json::array(), samples = json::array();
    if (s0 + i < t.steps.size()) {
      const PhaseTrajectory& tr = t.steps[s0 + i].trajectory;
      for (const TrajectorySegment& seg : tr.segments) {
        segments.push_back({{"foot", {seg.sagittal.foot, seg.lateral.foot}},
                            {"t_begin", seg.t_begin},
                            {"t_end", seg.t_end}});
      }
      for (const TrajectorySample& s : tr.samples) {
        samples.push_back({s.t, s.state.x, s.state.y, s.state.vx, s.state.vy, s.segment});
      }
      chunk["omega"] = tr.omega;
    }
    chunk["segments"] = segments;
    chunk["samples"] = samples;
    out.push_back(chunk.dump());
  }
  for (std::string& line : turn()) out.push_back(std::move(line));
  ended_ = episode_.finished();
  return out;
}

// ---------------------------------------------------------------------------
// Transport

namespace {

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

bool send_lines(int fd, const std::vector<std::string>& lines) {
  std::string data;
  for (const std::string& l : lines) data += l + "\n";
  return send_all(fd, data);
}

}  // namespace

Server::Server(std::shared_ptr<const Planner> planner, SessionOptions options, int port, const std::string& host)
    : planner_(std::move(planner)), options_(options) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw DomainError(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw DomainError("bad listen address " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw DomainError("cannot listen on " + host + ":" + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Server::~Server() {
  stopping_ = true;
  for (std::thread& w : workers_) {
    if (w.joinable()) w.join();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::run(int max_sessions) {
  int sessions = 0;
  while (!stopping_ && (max_sessions <= 0 || sessions < max_sessions)) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const unsigned seed = options_.seed + static_cast<unsigned>(sessions++);
    workers_.emplace_back([this, fd, seed] { serve_connection(fd, seed); });
  }
  for (std::thread& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

void Server::serve_connection(int fd, unsigned seed) {
  SessionOptions options = options_;
  options.seed = seed;
  Session session(planner_, options);
  std::string buffer;
  bool open = send_lines(fd, session.open());
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(options.timeout_ms);
  while (open && !session.finished() && !stopping_) {
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()).count();
    if (left <= 0) {
      open = send_lines(fd, session.time_out());
      deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(options.timeout_ms);
      continue;
    }
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(std::min<long long>(left, 100)));
    if (ready <= 0) continue;
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while (open && !session.finished() && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const int before = session.episode().tick();
      open = send_lines(fd, session.receive(line));
      // A rejected move does not consume the turn, nor restart its clock.
      if (session.episode().tick() != before) {
        deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(options.timeout_ms);
      }
    }
  }
  ::shutdown(fd, SHUT_RDWR);
  ::close(fd);
}

}  // namespace safenav
