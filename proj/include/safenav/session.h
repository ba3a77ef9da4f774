#pragma once

// Turn-based session protocol for a remote obstacle player: newline-delimited
// JSON messages over a TCP connection, one episode per connection.

#include <atomic>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "safenav/simulation.h"

namespace safenav {

struct SessionOptions {
  EpisodeConfig episode;  // trajectories are always recorded
  unsigned seed = 0;      // fallback moves
  int timeout_ms = 30000;
};

// Protocol state machine, independent of the transport. Every call returns
// the lines to send, in order.
class Session {
 public:
  Session(std::shared_ptr<const Planner> planner, SessionOptions options);

  // state_update and legal_moves for the first tick.
  std::vector<std::string> open();
  // One client line. A rejected or malformed move leaves the turn open; an
  // accepted one yields the trajectory chunks and the next turn or the
  // episode end.
  std::vector<std::string> receive(const std::string& line);
  // The client missed the deadline: a random legal move is played instead.
  std::vector<std::string> time_out();

  bool finished() const { return ended_; }
  const Episode& episode() const { return episode_; }
  int fallback_moves() const { return fallbacks_; }

 private:
  std::vector<std::string> play(Cell move, bool fallback);
  std::vector<std::string> turn() const;
  std::string reject(const std::string& reason, const Cell* cell) const;

  std::shared_ptr<const Planner> planner_;
  SessionOptions options_;
  Episode episode_;
  VisibilityTable vis_;
  std::unique_ptr<ObstacleModel> fallback_;
  int fallbacks_ = 0;
  bool ended_ = false;
  bool last_fallback_ = false;
  bool has_last_ = false;
  Cell last_move_;
};

// Accepts connections and runs one session per connection on its own thread.
class Server {
 public:
  // Binds host:port; port 0 picks a free port. Throws DomainError on failure.
  Server(std::shared_ptr<const Planner> planner, SessionOptions options, int port = 0,
         const std::string& host = "127.0.0.1");
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const { return port_; }
  // Serves until stop(); `max_sessions` > 0 returns after that many sessions.
  void run(int max_sessions = 0);
  void stop() { stopping_ = true; }

 private:
  void serve_connection(int fd, unsigned seed);

  std::shared_ptr<const Planner> planner_;
  SessionOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::vector<std::thread> workers_;
};

}  // namespace safenav
