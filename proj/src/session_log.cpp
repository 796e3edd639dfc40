#include "worldkit/session_log.hpp"

#include <sstream>

#include "worldkit/wire.hpp"

namespace worldkit {

using wire::json;

void SessionLogWriter::line(const std::string& json_text) {
  chain_ = fnv1a64(json_text, chain_);
  out_ << to_hex64(chain_) << ' ' << json_text << '\n';
}

void SessionLogWriter::header(const PipelineConfig& config, const std::string& session_id) {
  line(json{{"kind", "header"}, {"version", 1}, {"session_id", session_id}, {"config", wire::config_to_json(config)}}
           .dump());
}

void SessionLogWriter::turn(const TurnInput& input, const ResultEnvelope& envelope) {
  line(json{{"kind", "turn"},
            {"index", turns_},
            {"input", wire::turn_input_to_json(input)},
            {"envelope", wire::envelope_to_json(envelope)},
            {"envelope_digest", wire::envelope_digest(envelope)}}
           .dump());
  ++turns_;
}

void SessionLogWriter::finish() {
  line(json{{"kind", "end"}, {"turns", turns_}}.dump());
  out_.flush();
}

SessionLog read_session_log(std::string_view text) {
  auto corrupt = [](const std::string& msg) { return Error(ErrorKind::Corruption, "session log: " + msg); };
  std::uint64_t chain = 0xcbf29ce484222325ULL;
  SessionLog log;
  bool have_header = false, have_end = false;
  std::size_t pos = 0, lineno = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw corrupt("missing trailing newline");
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (have_end) throw corrupt("data after end entry");
    if (line.size() < 18 || line[16] != ' ') throw corrupt("malformed line " + std::to_string(lineno));
    const auto digest = parse_hex64(line.substr(0, 16));
    const std::string_view body = line.substr(17);
    chain = fnv1a64(body, chain);
    if (!digest || *digest != chain) throw corrupt("digest mismatch on line " + std::to_string(lineno));

    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw corrupt(std::string("line ") + std::to_string(lineno) + ": " + e.what());
    }
    try {
      const std::string kind = j.at("kind").get<std::string>();
      if (!have_header) {
        if (kind != "header" || j.at("version").get<int>() != 1) throw corrupt("missing header");
        log.config = wire::config_from_json(j.at("config"));
        log.session_id = j.at("session_id").get<std::string>();
        have_header = true;
      } else if (kind == "turn") {
        if (j.at("index").get<std::size_t>() != log.turns.size()) throw corrupt("turn index gap");
        LoggedTurn t;
        t.input = wire::turn_input_from_json(j.at("input"));
        t.envelope = wire::envelope_from_json(j.at("envelope"));
        t.envelope_digest = j.at("envelope_digest").get<std::string>();
        log.turns.push_back(std::move(t));
      } else if (kind == "end") {
        if (j.at("turns").get<std::size_t>() != log.turns.size()) throw corrupt("turn count mismatch");
        have_end = true;
      } else {
        throw corrupt("unknown entry kind " + kind);
      }
    } catch (const json::exception& e) {
      throw corrupt(e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Corruption) throw;
      throw corrupt(e.what());
    }
  }
  if (!have_header) throw corrupt("empty log");
  if (!have_end) throw corrupt("truncated: no end entry");
  return log;
}

ReplayReport replay_session_log(std::string_view text) {
  ReplayReport report;
  SessionLog log;
  try {
    log = read_session_log(text);
  } catch (const Error& e) {
    report.problems.push_back(e.what());
    return report;
  }
  auto pipeline = Pipeline::build(log.config, log.session_id);
  for (std::size_t i = 0; i < log.turns.size(); ++i) {
    const LoggedTurn& t = log.turns[i];
    const std::string logged = wire::envelope_digest(t.envelope);
    if (logged != t.envelope_digest) {
      report.problems.push_back("turn " + std::to_string(i) + ": logged envelope does not match its digest");
    }
    const ResultEnvelope fresh = pipeline->step(t.input);
    if (wire::envelope_digest(fresh) != t.envelope_digest) {
      report.problems.push_back("turn " + std::to_string(i) + ": re-executed envelope differs");
    }
    ++report.turns;
  }
  report.ok = report.problems.empty();
  return report;
}

std::vector<ResultEnvelope> run_logged_session(const PipelineConfig& config, const std::vector<TurnInput>& inputs,
                                               std::ostream& out) {
  auto pipeline = Pipeline::build(config);
  SessionLogWriter writer(out);
  writer.header(config, pipeline->session_id());
  std::vector<ResultEnvelope> envelopes;
  std::size_t next = 0;
  pipeline->stream(
      [&]() -> std::optional<TurnInput> {
        if (next >= inputs.size()) return std::nullopt;
        return inputs[next++];
      },
      [&](const ResultEnvelope& env) {
        writer.turn(inputs[next - 1], env);
        envelopes.push_back(env);
      });
  writer.finish();
  return envelopes;
}

}  // namespace worldkit
