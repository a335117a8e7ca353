#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dronecap::oracle {

struct OracleRequest {
  std::int64_t id = 0;
  std::string image_path;
};

struct OracleResponse {
  std::int64_t id = 0;
  std::string label;
  std::optional<double> confidence;
};

// Wire format, documented bit-exactly:
//   request line:  {"id":N,"image":"<path>"}
//   response line: {"id":N,"label":"<text>","confidence":F}
// confidence may be omitted. One JSON object per line, UTF-8, '\n' framing.
std::string encode_request(const OracleRequest& req);

struct ParseOutcome {
  std::optional<OracleResponse> response;
  std::string error;  // diagnosis when response is empty
  bool ok() const { return response.has_value(); }
};

// Never throws: malformed lines come back as diagnosed errors.
ParseOutcome parse_response_line(const std::string& line);

struct TransportError : std::runtime_error {
  std::int64_t failing_id;
  TransportError(const std::string& what, std::int64_t id)
      : std::runtime_error(what), failing_id(id) {}
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  // Answers every request or throws TransportError naming the failing id.
  virtual std::vector<OracleResponse> classify(const std::vector<OracleRequest>& requests) = 0;
};

std::vector<OracleResponse> classify_batch(const std::vector<OracleRequest>& requests,
                                           Oracle& endpoint);

// ---- In-process stubs -------------------------------------------------------

// Ground truth the stubs consult instead of opening images.
struct ImageTruth {
  std::string class_name;
  int view_degrees = 0;
};

enum class StubMode { Perfect, PoseBiased, ShakeSensitive };

struct StubOracleSpec {
  StubMode mode = StubMode::Perfect;
  double base_accuracy = 0.9;
  double decay_per_45deg = 0.15;
  std::uint64_t seed = 0;
};

// Simulates a classifier with a controllable pose bias: the probability of a
// correct answer is base - decay * (dtheta/45) where dtheta is the angular
// distance between the image's view and the class's favorite view. The
// shake-sensitive mode answers correctly with probability base regardless of
// pose, modelling degradation from camera shake alone. Decisions are a
// deterministic hash of (seed, image path).
//
// With an empty frontal_views map the stub derives an inherent favorite view
// per class from its seed, so measuring its accuracy table and assigning
// frontal poses discovers that bias the same way it would for a real
// classifier.
class StubOracle : public Oracle {
 public:
  StubOracle(StubOracleSpec spec, std::map<std::string, ImageTruth> truth,
             std::map<std::string, int> frontal_views, std::vector<std::string> class_names);

  std::vector<OracleResponse> classify(const std::vector<OracleRequest>& requests) override;

  // Analytic correctness probability for an image at angular distance dtheta
  // from the class's favorite view.
  double correct_probability(int dtheta) const;

  // The bias reference for a class: the supplied frontal view, or the
  // seed-derived inherent one.
  int favorite_view(const std::string& class_name) const;

 private:
  StubOracleSpec spec_;
  std::map<std::string, ImageTruth> truth_;
  std::map<std::string, int> frontal_views_;
  std::vector<std::string> class_names_;
};

// ---- Subprocess endpoint ----------------------------------------------------

struct SubprocessOptions {
  double timeout_seconds = 10.0;  // per pending request
  int pipeline_window = 32;       // max in-flight requests
};

// Spawns `command` via /bin/sh and speaks the line protocol over its stdin
// and stdout. Responses may arrive out of order; they are matched by id.
class SubprocessOracle : public Oracle {
 public:
  explicit SubprocessOracle(const std::string& command, SubprocessOptions options = {});
  ~SubprocessOracle() override;
  SubprocessOracle(const SubprocessOracle&) = delete;
  SubprocessOracle& operator=(const SubprocessOracle&) = delete;

  std::vector<OracleResponse> classify(const std::vector<OracleRequest>& requests) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dronecap::oracle
