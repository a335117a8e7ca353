#include "dronecap/oracle.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dronecap/rng.hpp"

namespace dronecap::oracle {

using json = nlohmann::json;

std::string encode_request(const OracleRequest& req) {
  json j{{"id", req.id}, {"image", req.image_path}};
  return j.dump() + "\n";
}

ParseOutcome parse_response_line(const std::string& line) {
  ParseOutcome out;
  json j;
  try {
    j = json::parse(line);
  } catch (const std::exception& e) {
    out.error = std::string("not valid JSON: ") + e.what();
    return out;
  }
  if (!j.is_object()) {
    out.error = "response line is not a JSON object";
    return out;
  }
  if (!j.contains("id") || !j["id"].is_number_integer()) {
    out.error = "response lacks an integer 'id'";
    return out;
  }
  if (!j.contains("label") || !j["label"].is_string()) {
    out.error = "response lacks a string 'label'";
    return out;
  }
  OracleResponse r;
  r.id = j["id"].get<std::int64_t>();
  r.label = j["label"].get<std::string>();
  if (j.contains("confidence") && !j["confidence"].is_null()) {
    if (!j["confidence"].is_number()) {
      out.error = "'confidence' must be a number when present";
      return out;
    }
    r.confidence = j["confidence"].get<double>();
  }
  out.response = std::move(r);
  return out;
}

std::vector<OracleResponse> classify_batch(const std::vector<OracleRequest>& requests,
                                           Oracle& endpoint) {
  std::set<std::int64_t> ids;
  for (const OracleRequest& r : requests)
    if (!ids.insert(r.id).second)
      throw std::invalid_argument("classify_batch: duplicate request id " + std::to_string(r.id));
  return endpoint.classify(requests);
}

// ---- Stub oracle -------------------------------------------------------------

StubOracle::StubOracle(StubOracleSpec spec, std::map<std::string, ImageTruth> truth,
                       std::map<std::string, int> frontal_views,
                       std::vector<std::string> class_names)
    : spec_(spec),
      truth_(std::move(truth)),
      frontal_views_(std::move(frontal_views)),
      class_names_(std::move(class_names)) {
  if (spec_.base_accuracy < 0.0 || spec_.base_accuracy > 1.0)
    throw std::invalid_argument("StubOracle: base_accuracy must be in [0,1]");
  if (class_names_.empty()) throw std::invalid_argument("StubOracle: needs the class list");
}

double StubOracle::correct_probability(int dtheta) const {
  switch (spec_.mode) {
    case StubMode::Perfect: return 1.0;
    case StubMode::ShakeSensitive: return spec_.base_accuracy;
    case StubMode::PoseBiased:
      return std::clamp(spec_.base_accuracy - spec_.decay_per_45deg * (dtheta / 45.0), 0.0, 1.0);
  }
  return 1.0;
}

int StubOracle::favorite_view(const std::string& class_name) const {
  const auto f = frontal_views_.find(class_name);
  if (f != frontal_views_.end()) return f->second;
  std::uint64_t h = spec_.seed ^ 0x66617673ULL;
  for (char c : class_name) h = (h ^ static_cast<std::uint64_t>(c)) * 0x100000001b3ULL;
  std::uint64_t state = h;
  return 45 * static_cast<int>(splitmix64(state) % 8);
}

std::vector<OracleResponse> StubOracle::classify(const std::vector<OracleRequest>& requests) {
  std::vector<OracleResponse> out;
  out.reserve(requests.size());
  for (const OracleRequest& req : requests) {
    const auto it = truth_.find(req.image_path);
    if (it == truth_.end())
      throw TransportError("stub oracle has no ground truth for " + req.image_path, req.id);
    const ImageTruth& truth = it->second;

    double p = 1.0;
    if (spec_.mode != StubMode::Perfect) {
      const int fav = favorite_view(truth.class_name);
      const int diff = std::abs(truth.view_degrees - fav) % 360;
      const int dtheta = std::min(diff, 360 - diff);
      p = correct_probability(dtheta);
    }

    // Deterministic per (seed, path): hash to a uniform draw.
    std::uint64_t h = spec_.seed ^ 0x9e3779b97f4a7c15ULL;
    for (char c : req.image_path) h = (h ^ static_cast<std::uint64_t>(c)) * 0x100000001b3ULL;
    std::uint64_t state = h;
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;

    OracleResponse resp;
    resp.id = req.id;
    if (u < p) {
      resp.label = truth.class_name;
      resp.confidence = 0.5 + 0.5 * p;
    } else {
      // A deterministic wrong answer: the next class in the list.
      std::size_t truth_idx = 0;
      for (std::size_t i = 0; i < class_names_.size(); ++i)
        if (class_names_[i] == truth.class_name) truth_idx = i;
      const std::size_t wrong =
          class_names_.size() > 1
              ? (truth_idx + 1 + splitmix64(state) % (class_names_.size() - 1)) %
                    class_names_.size()
              : truth_idx;
      resp.label = class_names_[wrong];
      resp.confidence = 0.5 * (1.0 - p) + 0.25;
    }
    out.push_back(std::move(resp));
  }
  return out;
}

// ---- Subprocess endpoint --------------------------------------------------------

struct SubprocessOracle::Impl {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string read_buffer;
  SubprocessOptions options;

  ~Impl() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    if (pid > 0) {
      ::kill(pid, SIGTERM);
      int status = 0;
      ::waitpid(pid, &status, 0);
    }
  }
};

SubprocessOracle::SubprocessOracle(const std::string& command, SubprocessOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = options;
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0)
    throw std::runtime_error("SubprocessOracle: pipe() failed");

  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("SubprocessOracle: fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    std::_Exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  impl_->pid = pid;
  impl_->to_child = in_pipe[1];
  impl_->from_child = out_pipe[0];
}

SubprocessOracle::~SubprocessOracle() = default;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::vector<OracleResponse> SubprocessOracle::classify(
    const std::vector<OracleRequest>& requests) {
  Impl& io = *impl_;
  std::vector<OracleResponse> responses(requests.size());
  std::vector<bool> answered(requests.size(), false);
  std::map<std::int64_t, std::size_t> slot_of;
  for (std::size_t i = 0; i < requests.size(); ++i) slot_of[requests[i].id] = i;

  std::size_t next_to_send = 0;
  std::size_t pending = 0;
  std::size_t done = 0;
  std::deque<std::pair<std::int64_t, double>> deadlines;  // id, absolute time

  const auto oldest_unanswered = [&]() -> std::int64_t {
    for (const auto& [id, t] : deadlines)
      if (!answered[slot_of.at(id)]) return id;
    return requests.empty() ? -1 : requests.front().id;
  };

  while (done < requests.size()) {
    // Keep the pipeline window full.
    while (next_to_send < requests.size() &&
           pending < static_cast<std::size_t>(io.options.pipeline_window)) {
      const std::string line = encode_request(requests[next_to_send]);
      std::size_t written = 0;
      while (written < line.size()) {
        const ssize_t n = ::write(io.to_child, line.data() + written, line.size() - written);
        if (n < 0) {
          if (errno == EINTR) continue;
          throw TransportError("oracle endpoint closed its input (write failed): id " +
                                   std::to_string(requests[next_to_send].id),
                               requests[next_to_send].id);
        }
        written += static_cast<std::size_t>(n);
      }
      deadlines.emplace_back(requests[next_to_send].id,
                             now_seconds() + io.options.timeout_seconds);
      ++next_to_send;
      ++pending;
    }

    // Drain complete lines already buffered.
    std::size_t nl;
    while ((nl = io.read_buffer.find('\n')) != std::string::npos) {
      const std::string line = io.read_buffer.substr(0, nl);
      io.read_buffer.erase(0, nl + 1);
      if (line.empty()) continue;
      const ParseOutcome parsed = parse_response_line(line);
      if (!parsed.ok())
        throw TransportError("oracle protocol error: " + parsed.error + " in line: " + line,
                             oldest_unanswered());
      const auto it = slot_of.find(parsed.response->id);
      if (it == slot_of.end())
        throw TransportError(
            "oracle protocol error: response for unknown id " + std::to_string(parsed.response->id),
            parsed.response->id);
      if (answered[it->second])
        throw TransportError(
            "oracle protocol error: duplicate response for id " + std::to_string(parsed.response->id),
            parsed.response->id);
      responses[it->second] = *parsed.response;
      answered[it->second] = true;
      ++done;
      --pending;
    }
    if (done == requests.size()) break;
    if (io.read_buffer.find('\n') != std::string::npos) continue;

    // Wait for more output, bounded by the earliest pending deadline.
    while (!deadlines.empty() && answered[slot_of.at(deadlines.front().first)])
      deadlines.pop_front();
    double wait_s = 1.0;
    std::int64_t waiting_id = oldest_unanswered();
    if (!deadlines.empty()) {
      wait_s = deadlines.front().second - now_seconds();
      waiting_id = deadlines.front().first;
      if (wait_s <= 0.0)
        throw TransportError("oracle timeout waiting for id " + std::to_string(waiting_id),
                             waiting_id);
    }
    struct pollfd pfd {
      io.from_child, POLLIN, 0
    };
    const int pr = ::poll(&pfd, 1, static_cast<int>(wait_s * 1000.0) + 1);
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw TransportError("poll() failed waiting for the oracle", waiting_id);
    }
    if (pr == 0) continue;  // deadline re-checked on the next loop

    char buf[4096];
    const ssize_t n = ::read(io.from_child, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("read() from the oracle failed", waiting_id);
    }
    if (n == 0)
      throw TransportError("oracle endpoint exited with " + std::to_string(requests.size() - done) +
                               " request(s) unanswered; first missing id " +
                               std::to_string(waiting_id),
                           waiting_id);
    io.read_buffer.append(buf, static_cast<std::size_t>(n));
  }
  return responses;
}

}  // namespace dronecap::oracle
