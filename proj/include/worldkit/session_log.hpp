#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "worldkit/pipeline.hpp"

namespace worldkit {

/// Session log: one "<digest> <json>" line per entry. The digest is FNV-1a
/// over the raw JSON bytes chained from the previous line's digest, so any
/// single-byte change anywhere in the file is detected.
///
/// Entries: a header with the config and session id, one entry per turn with
/// the input, the wire envelope and its digest, and a closing entry with the
/// turn count.
class SessionLogWriter {
 public:
  explicit SessionLogWriter(std::ostream& out) : out_(out) {}

  void header(const PipelineConfig& config, const std::string& session_id);
  void turn(const TurnInput& input, const ResultEnvelope& envelope);
  void finish();

 private:
  void line(const std::string& json_text);

  std::ostream& out_;
  std::uint64_t chain_ = 0xcbf29ce484222325ULL;
  std::size_t turns_ = 0;
};

struct LoggedTurn {
  TurnInput input;
  ResultEnvelope envelope;
  std::string envelope_digest;
};

struct SessionLog {
  PipelineConfig config;
  std::string session_id;
  std::vector<LoggedTurn> turns;
};

// Verifies the digest chain and structure; throws Error(Corruption).
SessionLog read_session_log(std::string_view text);

struct ReplayReport {
  bool ok = false;
  std::size_t turns = 0;
  std::vector<std::string> problems;
};

/// Re-executes the logged inputs on a fresh pipeline and checks every
/// envelope digest. ok iff the log is intact and the re-run is byte-identical.
ReplayReport replay_session_log(std::string_view text);

/// Streams `inputs` through a fresh pipeline, logging every turn.
std::vector<ResultEnvelope> run_logged_session(const PipelineConfig& config, const std::vector<TurnInput>& inputs,
                                               std::ostream& log);

}  // namespace worldkit
