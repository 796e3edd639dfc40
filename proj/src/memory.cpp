#include "worldkit/memory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace worldkit {

using nlohmann::json;

namespace {

void l2_normalize(Feature& f) {
  double n2 = 0.0;
  for (double v : f) n2 += v * v;
  if (n2 == 0.0) return;
  const double n = std::sqrt(n2);
  for (double& v : f) v /= n;
}

json to_json(const MemoryRecord& r) {
  return json{{"id", r.id},
              {"session", r.session},
              {"step", r.step},
              {"modality", std::string(to_string(r.modality))},
              {"feature", r.feature},
              {"payload_digest", r.payload_digest},
              {"metadata", r.metadata},
              {"weight", r.weight},
              {"pinned", r.pinned}};
}

MemoryRecord record_from_json(const json& j) {
  MemoryRecord r;
  r.id = j.at("id").get<std::string>();
  r.session = j.at("session").get<std::string>();
  r.step = j.at("step").get<std::uint64_t>();
  r.modality = modality_from_string(j.at("modality").get<std::string>());
  r.feature = j.at("feature").get<Feature>();
  r.payload_digest = j.at("payload_digest").get<std::string>();
  r.metadata = j.at("metadata").get<Metadata>();
  r.weight = j.at("weight").get<std::uint64_t>();
  r.pinned = j.at("pinned").get<bool>();
  return r;
}

}  // namespace

void MemoryConfig::validate() const {
  if (capacity == 0) throw Error(ErrorKind::InvalidArgument, "memory capacity must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be in [0,1]");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidArgument, "lambda must be > 0");
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorKind::InvalidArgument, "theta must be in (0,1]");
}

Feature featurize_frame(const ObservationFrame& frame) {
  Feature f{};
  const auto px = frame.pixels();
  const std::size_t n = std::min(px.size(), kFeatureDim);
  for (std::size_t i = 0; i < n; ++i) f[i] = px[i] / 255.0;
  l2_normalize(f);
  return f;
}

Feature featurize_text(std::string_view text) {
  Feature f{};
  for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
    f[fnv1a64(text.substr(i, 3)) % kFeatureDim] += 1.0;
  }
  l2_normalize(f);
  return f;
}

Feature featurize(Modality modality, std::span<const std::uint8_t> payload) {
  switch (modality) {
    case Modality::Image: return featurize_frame(decode_frame(payload));
    case Modality::Text:
      return featurize_text(std::string_view(reinterpret_cast<const char*>(payload.data()), payload.size()));
    default: return Feature{};
  }
}

std::string record_id(const std::string& session, std::uint64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%010llu", static_cast<unsigned long long>(step));
  return session + ":" + buf;
}

MemoryStore::MemoryStore(MemoryConfig config) : config_(config) { config_.validate(); }

void MemoryStore::create_session(const std::string& session) {
  if (sessions_.contains(session)) throw Error(ErrorKind::Conflict, "session exists: " + session);
  Session& s = sessions_[session];
  append_log(s, json{{"op", "create"}, {"session", session}}.dump());
}

MemoryStore::Session& MemoryStore::session_ref(const std::string& session) {
  auto it = sessions_.find(session);
  if (it == sessions_.end()) throw Error(ErrorKind::NotFound, "unknown session: " + session);
  return it->second;
}

const MemoryStore::Session& MemoryStore::session_ref(const std::string& session) const {
  auto it = sessions_.find(session);
  if (it == sessions_.end()) throw Error(ErrorKind::NotFound, "unknown session: " + session);
  return it->second;
}

void MemoryStore::append_log(Session& s, const std::string& line) {
  s.log += line;
  s.log += '\n';
}

std::string MemoryStore::record(const std::string& session, const Artifact& data, const Metadata& metadata) {
  Session& s = session_ref(session);
  MemoryRecord r;
  r.session = session;
  r.step = s.next_step;
  r.id = record_id(session, r.step);
  r.modality = data.modality;
  r.feature = featurize(data.modality, data.payload);
  r.payload_digest = to_hex64(fnv1a64(data.payload));
  r.metadata = metadata;
  s.records.push_back(r);
  ++s.next_step;
  append_log(s, json{{"op", "record"}, {"record", to_json(r)}}.dump());
  return r.id;
}

std::vector<MemoryRecord> MemoryStore::select(const std::string& session, const SelectQuery& query,
                                              std::size_t k, bool parallel) const {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  const Session& s = session_ref(session);
  std::vector<Feature> feats;
  std::vector<std::uint64_t> steps;
  feats.reserve(s.records.size());
  steps.reserve(s.records.size());
  for (const auto& r : s.records) {
    feats.push_back(r.feature);
    steps.push_back(r.step);
  }
  MemoryScoreInputs in{feats, steps, query.feature, query.now, config_.alpha, config_.lambda};
  const auto scores = parallel ? kernels::parallel::score_records(in) : kernels::serial::score_records(in);

  std::vector<std::size_t> order(s.records.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (s.records[a].step != s.records[b].step) return s.records[a].step > s.records[b].step;
    return s.records[a].id < s.records[b].id;
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
  std::vector<MemoryRecord> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(s.records[order[i]]);
  return out;
}

void MemoryStore::apply_merge(Session& s, const std::string& survivor, const std::string& absorbed) {
  auto find = [&](const std::string& id) {
    auto it = std::find_if(s.records.begin(), s.records.end(), [&](const auto& r) { return r.id == id; });
    if (it == s.records.end()) throw Error(ErrorKind::NotFound, "unknown record: " + id);
    return it;
  };
  auto dead = find(absorbed);
  auto keep = find(survivor);
  keep->weight += dead->weight;
  for (const auto& [key, value] : dead->metadata) keep->metadata.emplace(key, value);
  s.records.erase(dead);
}

void MemoryStore::apply_evict(Session& s, const std::string& id) {
  auto it = std::find_if(s.records.begin(), s.records.end(), [&](const auto& r) { return r.id == id; });
  if (it == s.records.end()) throw Error(ErrorKind::NotFound, "unknown record: " + id);
  s.records.erase(it);
}

CompressReport MemoryStore::compress(const std::string& session, const std::vector<std::string>& ids) {
  Session& s = session_ref(session);
  std::vector<const MemoryRecord*> chosen;
  for (const auto& id : ids) {
    auto it = std::find_if(s.records.begin(), s.records.end(), [&](const auto& r) { return r.id == id; });
    if (it == s.records.end()) {
      throw Error(ErrorKind::InvalidArgument, "record " + id + " is not in session " + session);
    }
    if (std::find(chosen.begin(), chosen.end(), &*it) == chosen.end()) chosen.push_back(&*it);
  }
  std::sort(chosen.begin(), chosen.end(), [](auto* a, auto* b) { return a->step < b->step; });

  std::vector<std::pair<std::string, std::string>> merges;  // absorbed, survivor
  std::vector<const MemoryRecord*> survivors;
  for (const MemoryRecord* r : chosen) {
    const MemoryRecord* target = nullptr;
    if (!r->pinned) {
      for (const MemoryRecord* sv : survivors) {
        if (sv->modality == r->modality && cosine(sv->feature, r->feature) >= config_.theta) {
          target = sv;
          break;
        }
      }
    }
    if (target) merges.emplace_back(r->id, target->id);
    else survivors.push_back(r);
  }

  CompressReport report;
  for (const auto& [absorbed, survivor] : merges) {
    apply_merge(s, survivor, absorbed);
    append_log(s, json{{"op", "merge"}, {"survivor", survivor}, {"absorbed", absorbed}}.dump());
    report.merged.emplace(absorbed, survivor);
  }
  return report;
}

CompressReport MemoryStore::compress_all(const std::string& session) {
  std::vector<std::string> ids;
  for (const auto& r : records(session)) ids.push_back(r.id);
  return compress(session, ids);
}

EvictionReport MemoryStore::manage(const std::string& session) {
  Session& s = session_ref(session);
  EvictionReport report;
  if (s.records.size() <= config_.capacity) return report;
  const auto pinned = static_cast<std::size_t>(
      std::count_if(s.records.begin(), s.records.end(), [](const auto& r) { return r.pinned; }));
  if (pinned > config_.capacity) {
    throw Error(ErrorKind::Conflict, "cannot reach capacity: " + std::to_string(pinned) + " pinned records");
  }
  const auto now = static_cast<double>(s.next_step);
  while (s.records.size() > config_.capacity) {
    const MemoryRecord* victim = nullptr;
    double victim_rho = 0.0;
    for (const auto& r : s.records) {
      if (r.pinned) continue;
      const double rho = static_cast<double>(r.weight) * std::exp(-config_.lambda * (now - static_cast<double>(r.step)));
      // records are in ascending step order, so strict < keeps the oldest on ties
      if (!victim || rho < victim_rho) {
        victim = &r;
        victim_rho = rho;
      }
    }
    const std::string id = victim->id;
    apply_evict(s, id);
    append_log(s, json{{"op", "evict"}, {"id", id}}.dump());
    report.evicted.push_back(id);
  }
  return report;
}

void MemoryStore::pin(const std::string& session, const std::string& id, bool pinned) {
  Session& s = session_ref(session);
  auto it = std::find_if(s.records.begin(), s.records.end(), [&](const auto& r) { return r.id == id; });
  if (it == s.records.end()) throw Error(ErrorKind::NotFound, "unknown record: " + id);
  it->pinned = pinned;
  append_log(s, json{{"op", "pin"}, {"id", id}, {"pinned", pinned}}.dump());
}

const std::vector<MemoryRecord>& MemoryStore::records(const std::string& session) const {
  return session_ref(session).records;
}

std::uint64_t MemoryStore::next_step(const std::string& session) const { return session_ref(session).next_step; }

std::uint64_t MemoryStore::total_weight(const std::string& session) const {
  std::uint64_t w = 0;
  for (const auto& r : records(session)) w += r.weight;
  return w;
}

std::string MemoryStore::serialize(const std::string& session) const {
  const Session& s = session_ref(session);
  json records = json::array();
  for (const auto& r : s.records) records.push_back(to_json(r));
  return json{{"session", session}, {"next_step", s.next_step}, {"records", records}}.dump();
}

std::string MemoryStore::log(const std::string& session) const { return session_ref(session).log; }

void MemoryStore::replay(std::string_view log_text) {
  std::istringstream in{std::string(log_text)};
  std::string line;
  Session* s = nullptr;
  std::string name;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json ev;
    try {
      ev = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Corruption, std::string("memory log: ") + e.what());
    }
    const std::string op = ev.at("op").get<std::string>();
    if (op == "create") {
      name = ev.at("session").get<std::string>();
      create_session(name);
      s = &sessions_.at(name);
      continue;
    }
    if (!s) throw Error(ErrorKind::Corruption, "memory log: event before create");
    if (op == "record") {
      MemoryRecord r = record_from_json(ev.at("record"));
      if (r.session != name || r.step != s->next_step) throw Error(ErrorKind::Corruption, "memory log: step gap");
      s->next_step = r.step + 1;
      s->records.push_back(std::move(r));
    } else if (op == "merge") {
      apply_merge(*s, ev.at("survivor").get<std::string>(), ev.at("absorbed").get<std::string>());
    } else if (op == "evict") {
      apply_evict(*s, ev.at("id").get<std::string>());
    } else if (op == "pin") {
      auto id = ev.at("id").get<std::string>();
      auto it = std::find_if(s->records.begin(), s->records.end(), [&](const auto& r) { return r.id == id; });
      if (it == s->records.end()) throw Error(ErrorKind::Corruption, "memory log: pin of unknown record");
      it->pinned = ev.at("pinned").get<bool>();
    } else {
      throw Error(ErrorKind::Corruption, "memory log: unknown op " + op);
    }
    append_log(*s, line);
  }
}

}  // namespace worldkit
