#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "worldkit/core.hpp"
#include "worldkit/kernels.hpp"

namespace worldkit {

struct MemoryRecord {
  std::string id;
  std::string session;
  std::uint64_t step = 0;
  Modality modality = Modality::Text;
  Feature feature{};
  std::string payload_digest;
  Metadata metadata;
  std::uint64_t weight = 1;
  bool pinned = false;

  bool operator==(const MemoryRecord&) const = default;
};

struct MemoryConfig {
  std::size_t capacity = 256;
  double alpha = 0.7;
  double lambda = 0.05;
  double theta = 0.98;

  void validate() const;
};

/// Frames: pixels/255 flattened row-major into the first 32 dims; text:
/// character-trigram counts in 32 FNV-1a buckets. L2-normalized; other
/// modalities and all-zero inputs give the zero vector.
Feature featurize(Modality modality, std::span<const std::uint8_t> payload);
Feature featurize_frame(const ObservationFrame& frame);
Feature featurize_text(std::string_view text);

struct SelectQuery {
  Feature feature{};
  std::uint64_t now = 0;
};

struct CompressReport {
  // absorbed id -> survivor id
  std::map<std::string, std::string> merged;
};

struct EvictionReport {
  std::vector<std::string> evicted;
};

/// Session-namespaced interaction memory. Every mutation is also appended to
/// a per-session log; replaying the log reconstructs the session exactly.
class MemoryStore {
 public:
  explicit MemoryStore(MemoryConfig config = {});

  const MemoryConfig& config() const { return config_; }

  void create_session(const std::string& session);
  bool has_session(const std::string& session) const { return sessions_.contains(session); }

  // Returns the new record id. Throws NotFound for an unknown session.
  std::string record(const std::string& session, const Artifact& data, const Metadata& metadata = {});

  /// Top-k by alpha*cos + (1-alpha)*exp(-lambda*(now-step)); ties by larger
  /// step then lexicographic id.
  std::vector<MemoryRecord> select(const std::string& session, const SelectQuery& query, std::size_t k,
                                   bool parallel = true) const;

  CompressReport compress(const std::string& session, const std::vector<std::string>& ids);
  CompressReport compress_all(const std::string& session);

  // Evicts lowest retention weight*exp(-lambda*(now-step)) until size <= capacity.
  EvictionReport manage(const std::string& session);

  void pin(const std::string& session, const std::string& id, bool pinned = true);

  const std::vector<MemoryRecord>& records(const std::string& session) const;
  std::size_t size(const std::string& session) const { return records(session).size(); }
  std::uint64_t next_step(const std::string& session) const;
  std::uint64_t total_weight(const std::string& session) const;

  // Canonical byte form of one session's state.
  std::string serialize(const std::string& session) const;
  // Append-only log, one JSON object per line.
  std::string log(const std::string& session) const;
  // Rebuilds a session from its log into this store.
  void replay(std::string_view log_text);

 private:
  struct Session {
    std::vector<MemoryRecord> records;  // ascending step
    std::uint64_t next_step = 0;
    std::string log;
  };

  Session& session_ref(const std::string& session);
  const Session& session_ref(const std::string& session) const;
  void apply_merge(Session& s, const std::string& survivor, const std::string& absorbed);
  void apply_evict(Session& s, const std::string& id);
  static void append_log(Session& s, const std::string& line);

  MemoryConfig config_;
  std::map<std::string, Session> sessions_;
};

std::string record_id(const std::string& session, std::uint64_t step);

}  // namespace worldkit
