#include "worldkit/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "worldkit/service.hpp"
#include "worldkit/session_log.hpp"
#include "worldkit/wire.hpp"

namespace worldkit {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_pgm(const std::filesystem::path& path, const ObservationFrame& f) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << f.width() << ' ' << f.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(f.pixels().data()), static_cast<std::streamsize>(f.pixels().size()));
}

HttpService* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

struct RunOptions {
  std::string task = "navigate";
  std::string map_path;
  std::string config_path;
  std::string actions;
  std::string query;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double p_slip = -1.0;
  std::string out_path = "session.log";
  std::string frames_dir;
};

int do_run(const RunOptions& o, std::ostream& out) {
  PipelineConfig config;
  if (!o.config_path.empty()) config = wire::load_config_file(o.config_path);
  config.task = o.task;
  if (!o.map_path.empty()) config.map_text = read_file(o.map_path);
  if (o.seed_set || !config.seed) config.seed = o.seed;
  if (o.p_slip >= 0.0) config.kernel.p_slip = o.p_slip;

  std::vector<TurnInput> inputs;
  if (task_from_string(o.task) == Task::Navigate) {
    for (auto& signal : parse_action_list(o.actions)) {
      TurnInput in;
      in.actions.push_back(std::move(signal));
      inputs.push_back(std::move(in));
    }
  } else {
    TurnInput in;
    in.actions = parse_action_list(o.actions);
    if (!o.query.empty()) in.query = o.query;
    inputs.push_back(std::move(in));
  }

  const auto parent = std::filesystem::path(o.out_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream log(o.out_path, std::ios::binary);
  if (!log) throw Error(ErrorKind::NotFound, "cannot write " + o.out_path);
  const auto envelopes = run_logged_session(config, inputs, log);
  log.close();

  if (!o.frames_dir.empty()) {
    std::filesystem::create_directories(o.frames_dir);
    for (const auto& env : envelopes) {
      for (std::size_t k = 0; k < env.artifacts.size(); ++k) {
        if (env.artifacts[k].modality != Modality::Image) continue;
        char name[64];
        std::snprintf(name, sizeof(name), "turn%04llu_f%02zu.pgm", static_cast<unsigned long long>(env.turn), k);
        write_pgm(std::filesystem::path(o.frames_dir) / name, decode_frame(env.artifacts[k].payload));
      }
    }
  }
  std::size_t errors = 0;
  for (const auto& env : envelopes) {
    if (!env.ok()) ++errors;
  }
  out << "wrote " << envelopes.size() << " envelopes to " << o.out_path;
  if (!envelopes.empty()) {
    const auto& last = envelopes.back();
    out << " (terminal=" << (last.terminal ? "true" : "false");
    if (auto it = last.metadata.find("cumulative_reward"); it != last.metadata.end()) {
      out << ", cumulative_reward=" << it->second;
    }
    out << ")";
  }
  out << "\n";
  return errors == 0 ? 0 : 1;
}

int do_replay(const std::string& path, std::ostream& out, std::ostream& err) {
  const ReplayReport report = replay_session_log(read_file(path));
  if (report.ok) {
    out << "replay ok: " << report.turns << " turns byte-identical\n";
    return 0;
  }
  for (const auto& p : report.problems) err << "replay: " << p << "\n";
  return 1;
}

int do_export(const std::string& path, const std::string& format, const wire::DepthQuery& q, std::ostream& out,
              std::ostream& err) {
  const std::string text = read_file(path);
  const SessionLog log = read_session_log(text);
  auto pipeline = Pipeline::build(log.config, log.session_id);
  for (const auto& t : log.turns) {
    if (wire::envelope_digest(pipeline->step(t.input)) != t.envelope_digest) {
      err << "export: log does not replay byte-identically\n";
      return 1;
    }
  }
  if (format == "pointcloud") {
    out << write_wkpc(export_points(pipeline->grid()).points);
  } else if (format == "depth") {
    const Pose& pose = pipeline->state().pose;
    DepthCamera cam{pose.x + 0.5, pose.y + 0.5, q.yaw ? wrap_yaw(*q.yaw) : 90.0 * static_cast<int>(pose.heading)};
    out << wire::depth_to_json(render_depth(pipeline->grid(), cam, q.rays, q.fov), cam, q).dump() << "\n";
  } else if (format == "memory-log") {
    out << pipeline->memory().log(pipeline->session_id());
  } else if (format == "envelopes") {
    for (const auto& t : log.turns) out << wire::envelope_to_json(t.envelope).dump() << "\n";
  } else {
    err << "export: unknown format " << format << "\n";
    return 2;
  }
  return 0;
}

int do_serve(const std::string& host, int port, const std::string& config_path, std::ostream& out) {
  if (const char* env = std::getenv("WORLDKIT_PORT"); env && *env) port = std::atoi(env);
  std::optional<PipelineConfig> defaults;
  if (!config_path.empty()) defaults = wire::load_config_file(config_path);
  auto registry = std::make_shared<SessionRegistry>(defaults);
  HttpService service(registry);
  const int bound = service.bind(host, port);
  if (bound < 0) throw Error(ErrorKind::Conflict, "cannot bind " + host + ":" + std::to_string(port));
  out << "listening on " << host << ":" << bound << std::endl;
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.listen();
  g_service = nullptr;
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"worldkit: world-model session runner and service"};
  app.require_subcommand(1);

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string serve_config;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (WORLDKIT_PORT overrides)");
  serve->add_option("--config", serve_config, "Default session config (JSON)");

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run a scripted session and write a replayable log");
  run->add_option("--task", run_opts.task, "navigate | act | reason | sonify | reconstruct");
  run->add_option("--map", run_opts.map_path, "Map text file (default: built-in demo map)");
  run->add_option("--config", run_opts.config_path, "Session config (JSON)");
  run->add_option("--actions", run_opts.actions, "Comma-separated actions, e.g. F,F,TR,F,F or yaw=90");
  run->add_option("--query", run_opts.query, "Query / event text for reason, sonify and act");
  auto* seed_opt = run->add_option("--seed", run_opts.seed, "Session seed");
  run->add_option("--p-slip", run_opts.p_slip, "Override slip probability");
  run->add_option("--out", run_opts.out_path, "Session log path");
  run->add_option("--frames", run_opts.frames_dir, "Directory for PGM frame dumps");

  std::string log_path;
  std::string format = "pointcloud";
  wire::DepthQuery depth_q;
  double export_yaw = 0.0;
  auto* exp = app.add_subcommand("export", "Export a representation from a session log");
  exp->add_option("--log", log_path, "Session log")->required();
  exp->add_option("--format", format, "pointcloud | depth | memory-log | envelopes");
  auto* yaw_opt = exp->add_option("--yaw", export_yaw, "Depth camera yaw (degrees)");
  exp->add_option("--rays", depth_q.rays, "Depth rays");
  exp->add_option("--fov", depth_q.fov, "Depth field of view (degrees)");

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Re-execute a session log and verify digests");
  replay->add_option("--log", replay_path, "Session log")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*serve) return do_serve(host, port, serve_config, out);
    if (*run) {
      run_opts.seed_set = seed_opt->count() > 0;
      return do_run(run_opts, out);
    }
    if (*exp) {
      if (yaw_opt->count() > 0) depth_q.yaw = export_yaw;
      return do_export(log_path, format, depth_q, out, err);
    }
    if (*replay) return do_replay(replay_path, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace worldkit
