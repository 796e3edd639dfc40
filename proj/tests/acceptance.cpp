// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "worldkit/cli.hpp"
#include "worldkit/pipeline.hpp"
#include "worldkit/service.hpp"
#include "worldkit/session_log.hpp"
#include "worldkit/wire.hpp"

using namespace worldkit;
using nlohmann::json;

namespace {

// Tolerances and limits.
constexpr double kProbSumTol = 1e-12;
constexpr double kNormalizationLimitS = 5.0;
constexpr double kChiSquareLimitS = 10.0;
constexpr double kReplayLimitS = 5.0;
constexpr double kDepthTol = 1e-6;
constexpr double kRewardTol = 1e-12;
constexpr std::size_t kChiPairs = 20;
constexpr std::size_t kChiDraws = 10000;
constexpr std::size_t kReplayTurns = 100;
constexpr std::size_t kMutations = 600;
constexpr std::size_t kWalkSteps = 200;
constexpr std::size_t kDepthRays = 1000;
constexpr std::size_t kMemoryRecords = 1000;
constexpr std::size_t kMemoryQueries = 100;
constexpr std::size_t kTopK = 10;
constexpr std::size_t kPlannerMaps = 20;
constexpr std::size_t kMemoryLawTurns = 25;

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

WorldState at(int x, int y, Heading h) {
  WorldState s;
  s.pose = Pose{x, y, h, std::nullopt};
  return s;
}

constexpr Heading kHeadings[] = {Heading::N, Heading::E, Heading::S, Heading::W};

// ---------------------------------------------------------------------------

Verdict transition_normalization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::size_t pairs = 0, bad_sum = 0, wall_hits = 0;
  double worst = 0;
  for (int m = 0; m < 10; ++m) {
    const auto text = oracle::random_map(rng, 5, 9);
    const auto map = GridMap::parse(text);
    KernelConfig cfg;
    cfg.p_slip = 0.1 * m;
    for (int y = 0; y < map.height(); ++y)
      for (int x = 0; x < map.width(); ++x) {
        const char c = oracle::map_char(text, x, y);
        if (c == '#' || c == 'G') continue;
        for (Heading h : kHeadings)
          for (int a = 0; a < kActionCount; ++a) {
            ++pairs;
            double sum = 0;
            for (const auto& o : transition_distribution(at(x, y, h), a, cfg, map)) {
              sum += o.probability;
              if (oracle::map_char(text, o.state.pose.x, o.state.pose.y) == '#') ++wall_hits;
            }
            worst = std::max(worst, std::abs(sum - 1.0));
            if (std::abs(sum - 1.0) > kProbSumTol) ++bad_sum;
          }
      }
  }
  const double secs = seconds_since(t0);
  Verdict o;
  o.pass = bad_sum == 0 && wall_hits == 0 && secs < kNormalizationLimitS;
  o.detail = fmt("%zu (s,a) pairs, max |sum-1| = %.3g, wall violations %zu, %.2f s (limit %.0f s)", pairs, worst,
                 wall_hits, secs, kNormalizationLimitS);
  return o;
}

Verdict stochastic_agreement() {
  const auto t0 = Clock::now();
  std::mt19937_64 pick(2002);
  KernelConfig cfg;
  cfg.p_slip = 0.2;
  std::size_t done = 0, rejected = 0;
  double worst = 0;
  while (done < kChiPairs) {
    const auto text = oracle::random_map(pick, 5, 9);
    const auto map = GridMap::parse(text);
    std::uniform_int_distribution<int> ux(1, map.width() - 2), uy(1, map.height() - 2), ua(0, 3), uh(0, 3);
    const auto s = at(ux(pick), uy(pick), kHeadings[uh(pick)]);
    if (oracle::map_char(text, s.pose.x, s.pose.y) != '.' && oracle::map_char(text, s.pose.x, s.pose.y) != 'S') continue;
    const int a = ua(pick);
    const auto dist = transition_distribution(s, a, cfg, map);
    if (dist.size() < 2) continue;  // blocked: nothing to test
    std::vector<std::size_t> counts(dist.size(), 0);
    std::vector<double> probs;
    for (const auto& o : dist) probs.push_back(o.probability);
    std::mt19937_64 rng(9000 + done);
    for (std::size_t i = 0; i < kChiDraws; ++i) {
      const auto next = sample_transition(s, a, cfg, map, rng);
      for (std::size_t k = 0; k < dist.size(); ++k)
        if (dist[k].state == next) ++counts[k];
    }
    const double chi = oracle::chi_square(counts, probs, kChiDraws);
    worst = std::max(worst, chi);
    if (chi >= oracle::kChi2Df1Alpha001) ++rejected;
    ++done;
  }
  const double secs = seconds_since(t0);
  Verdict o;
  o.pass = rejected == 0 && secs < kChiSquareLimitS;
  o.detail = fmt("%zu pairs x %zu draws, max chi2 = %.3f (critical %.3f, df=1), rejected %zu, %.2f s (limit %.0f s)",
                 done, kChiDraws, worst, oracle::kChi2Df1Alpha001, rejected, secs, kChiSquareLimitS);
  return o;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "worldkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict determinism_replay() {
  const auto dir = std::filesystem::path(WORLDKIT_TEST_TMP) / "acceptance";
  std::filesystem::create_directories(dir);
  const std::string map_path = (dir / "pocket.map").string();
  std::ofstream(map_path) << "#########\n#S.....##\n#......##\n#......##\n#......##\n#......##\n#......##\n"
                             "######.G#\n#########\n";
  const char* cycle[] = {"F", "R", "B", "L", "TL", "TR", "yaw=90", "TR", "TL", "azimuth=45"};
  std::string actions;
  for (std::size_t i = 0; i < kReplayTurns; ++i) actions += std::string(i ? "," : "") + cycle[i % 10];
  const std::string log_path = (dir / "session.log").string();

  const auto t0 = Clock::now();
  const int run_code = run_cli({"run", "--task", "navigate", "--map", map_path, "--actions", actions, "--seed", "17",
                                "--p-slip", "0.2", "--out", log_path});
  const int replay_code = run_cli({"replay", "--log", log_path});
  std::string text;
  {
    std::ifstream in(log_path, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::size_t turns = 0;
  bool terminal = false;
  try {
    const auto parsed = read_session_log(text);
    turns = parsed.turns.size();
    for (const auto& t : parsed.turns) terminal = terminal || t.envelope.terminal;
  } catch (const Error&) {
  }

  // Mutations: evenly spaced positions plus the first and last bytes, each
  // replaced by a different byte value.
  std::size_t tried = 0, undetected = 0;
  const std::string bad_path = (dir / "mutated.log").string();
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> bit(0, 7);
  for (std::size_t k = 0; k < kMutations && !text.empty(); ++k) {
    const std::size_t pos = k == 0 ? 0 : k == 1 ? text.size() - 1 : (k * 7919u) % text.size();
    std::string bad = text;
    bad[pos] = static_cast<char>(bad[pos] ^ (1 << bit(rng)));
    std::ofstream(bad_path, std::ios::binary) << bad;
    ++tried;
    if (run_cli({"replay", "--log", bad_path}) != 1) ++undetected;
  }
  const double secs = seconds_since(t0);
  Verdict o;
  o.pass = run_code == 0 && replay_code == 0 && turns == kReplayTurns && !terminal && undetected == 0 &&
           secs < kReplayLimitS;
  o.detail = fmt("run=%d replay=%d, %zu turns in %zu-byte log, %zu/%zu mutations exit 1, %.2f s (limit %.0f s)",
                 run_code, replay_code, turns, text.size(), tried - undetected, tried, secs, kReplayLimitS);
  return o;
}

Verdict revisit_consistency() {
  std::mt19937_64 rng(4004);
  const auto text = oracle::random_map(rng, 7, 9, 0.2);
  PipelineConfig cfg;
  cfg.map_text = text;
  cfg.seed = 44;
  auto p = Pipeline::build(cfg);
  std::map<std::string, Bytes> seen;
  std::size_t steps = 0, revisits = 0, mismatches = 0;
  std::uniform_int_distribution<int> ua(0, kActionCount - 1);
  const auto rows = oracle::rows(text);
  while (steps < kWalkSteps) {
    const int a = ua(rng);
    const auto& s = p->state().pose;
    const auto next = oracle::exact_step(rows, {s.x, s.y, static_cast<int>(s.heading)}, a);
    if (rows[static_cast<std::size_t>(next.y)][static_cast<std::size_t>(next.x)] == 'G') continue;
    TurnInput in;
    in.actions.emplace_back(action_token(a));
    const auto env = p->call_once(in);
    if (!env.ok() || env.artifacts.size() != 1) return {false, "navigate turn failed: " + env.metadata.at("error")};
    ++steps;
    const auto& pose = env.metadata.at("pose");
    auto [it, fresh] = seen.emplace(pose, env.artifacts[0].payload);
    if (!fresh) {
      ++revisits;
      if (it->second != env.artifacts[0].payload) ++mismatches;
    }
  }
  Verdict o;
  o.pass = mismatches == 0 && revisits > 0;
  o.detail = fmt("%zu steps, %zu distinct poses, %zu revisits, %zu mismatching frames", steps, seen.size(), revisits,
                 mismatches);
  return o;
}

Verdict reconstruction() {
  PipelineConfig cfg;
  cfg.seed = 5;
  cfg.kernel.p_slip = 0.0;
  auto p = Pipeline::build(cfg);
  for (const auto& a : oracle::demo_coverage_walk()) {
    TurnInput in;
    in.actions.emplace_back(a);
    if (!p->call_once(in).ok()) return {false, "walk turn failed"};
  }
  const std::string text(kDemoMap);
  const auto& g = p->grid();
  std::size_t observed = 0, correct = 0;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) {
      if (g.observed_count(x, y) == 0) continue;
      ++observed;
      const char c = oracle::map_char(text, x, y);
      const Occupancy truth = c == '#' ? Occupancy::Wall : c == 'G' ? Occupancy::Goal : Occupancy::Free;
      if (g.at(x, y) == truth) ++correct;
    }
  const std::size_t points = export_points(g).points.size();
  const std::size_t walls = oracle::count_char(text, '#');
  Verdict o;
  o.pass = observed > 0 && correct == observed && points == walls;
  o.detail = fmt("%zu/%zu observed cells correct, %zu points vs %zu '#' cells", correct, observed, points, walls);
  return o;
}

Verdict depth_oracle() {
  std::mt19937_64 rng(6006);
  std::uniform_real_distribution<double> u(0.0, 1.0), yaw(0.0, 360.0);
  std::size_t done = 0, bad = 0;
  double worst = 0;
  while (done < kDepthRays) {
    const auto text = oracle::random_map(rng, 5, 9, 0.3);
    const auto map = GridMap::parse(text);
    const auto grid = OccupancyGrid::from_map(map);
    const auto rows = oracle::rows(text);
    for (int k = 0; k < 50 && done < kDepthRays; ++k) {
      const double x = u(rng) * map.width(), y = u(rng) * map.height();
      if (oracle::map_char(text, static_cast<int>(x), static_cast<int>(y)) == '#') continue;
      const double yw = yaw(rng);
      const double got = render_depth(grid, {x, y, yw}, 1, 0.0).depths.at(0);
      const double want = oracle::march_depth(rows, x, y, yw * std::numbers::pi / 180.0);
      const double err = std::abs(got - want);
      worst = std::max(worst, err);
      if (err > kDepthTol) ++bad;
      ++done;
    }
  }
  Verdict o;
  o.pass = bad == 0;
  o.detail = fmt("%zu raycasts, max |depth - oracle| = %.3g (tol %.0e), %zu outside", done, worst, kDepthTol, bad);
  return o;
}

Verdict memory_oracle() {
  std::mt19937_64 rng(7007);
  MemoryConfig mc;
  mc.capacity = 100000;
  MemoryStore store(mc);
  store.create_session("acc");
  for (std::size_t i = 0; i < kMemoryRecords; ++i) store.record("acc", oracle::random_artifact(rng));
  std::normal_distribution<double> n(0, 1);
  std::size_t equal_sets = 0;
  for (std::size_t q = 0; q < kMemoryQueries; ++q) {
    Feature f{};
    if (q % 4 == 0) {
      f = store.records("acc")[q * 7].feature;  // exact hits too
    } else {
      for (auto& v : f) v = n(rng);
    }
    const std::uint64_t now = kMemoryRecords + q;
    const auto want = oracle::topk(store.records("acc"), f, now, kTopK, mc.alpha, mc.lambda);
    std::set<std::string> a(want.begin(), want.end()), b;
    for (const auto& r : store.select("acc", {f, now}, kTopK)) b.insert(r.id);
    if (a == b) ++equal_sets;
  }

  // compress and manage on a store with duplicates
  MemoryConfig small = mc;
  small.capacity = 64;
  small.theta = 0.95;
  MemoryStore dup(small);
  dup.create_session("d");
  std::vector<Artifact> pool;
  for (int i = 0; i < 30; ++i) pool.push_back(oracle::random_artifact(rng));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int i = 0; i < 300; ++i) dup.record("d", pool[pick(rng)]);
  dup.pin("d", dup.records("d")[5].id);
  const auto before = dup.total_weight("d");
  dup.compress_all("d");
  const auto after = dup.total_weight("d");
  for (int i = 0; i < 200; ++i) dup.record("d", oracle::random_artifact(rng));
  dup.manage("d");
  const bool pinned_kept = std::any_of(dup.records("d").begin(), dup.records("d").end(),
                                       [](const MemoryRecord& r) { return r.pinned; });

  Verdict o;
  o.pass = equal_sets == kMemoryQueries && after == before && dup.size("d") <= small.capacity && pinned_kept;
  o.detail = fmt("%zu/%zu top-%zu sets equal over %zu records; weight %llu -> %llu after compress; size %zu <= %zu "
                 "after manage",
                 equal_sets, kMemoryQueries, kTopK, kMemoryRecords, static_cast<unsigned long long>(before),
                 static_cast<unsigned long long>(after), dup.size("d"), small.capacity);
  return o;
}

Verdict planner_optimality() {
  std::mt19937_64 rng(8008);
  std::size_t optimal = 0, reached = 0;
  for (std::size_t m = 0; m < kPlannerMaps; ++m) {
    const auto text = oracle::random_map(rng, 4, 7);
    PipelineConfig cfg;
    cfg.task = "act";
    cfg.map_text = text;
    cfg.seed = m;
    cfg.kernel.p_slip = 0.0;
    auto p = Pipeline::build(cfg);
    const auto s0 = p->state().pose;
    const auto env = p->call_once(TurnInput{});
    if (!env.ok()) continue;
    const auto len = std::stoi(env.metadata.at("plan_length"));
    if (len == oracle::optimal_plan_length(text, s0.x, s0.y, static_cast<int>(s0.heading))) ++optimal;
    TurnInput nav;
    nav.task = "navigate";
    nav.actions = parse_action_list(env.metadata.at("plan"));
    if (p->call_once(nav).terminal) ++reached;
  }
  Verdict o;
  o.pass = optimal == kPlannerMaps && reached == kPlannerMaps;
  o.detail = fmt("%zu/%zu plans optimal, %zu/%zu reach terminal", optimal, kPlannerMaps, reached, kPlannerMaps);
  return o;
}

Verdict loop_closures() {
  const double durations[] = {0.05, 0.1, 0.25, 0.5, 1.0};
  std::size_t audio_ok = 0, audio_total = 0;
  for (double d : durations) {
    for (const char* event : {"step", "goal"}) {
      PipelineConfig cfg;
      cfg.task = "sonify";
      cfg.seed = 1;
      auto p = Pipeline::build(cfg);
      TurnInput in;
      in.query = event;
      in.controls.duration_s = d;
      p->call_once(in);
      TurnInput q;
      q.task = "reason";
      q.query = "event?";
      q.query_kind = ReasoningKind::Audio;
      ++audio_total;
      const auto env = p->call_once(q);
      if (env.ok() && env.metadata.at("answer.event") == event) ++audio_ok;
    }
  }

  std::mt19937_64 rng(9009);
  std::size_t plan_ok = 0, plan_total = 0;
  double worst = 0;
  for (int m = 0; m < 6; ++m) {
    PipelineConfig cfg;
    cfg.task = "act";
    cfg.seed = 2;
    cfg.kernel.p_slip = 0.0;
    if (m > 0) cfg.map_text = oracle::random_map(rng, 5, 9);
    auto p = Pipeline::build(cfg);
    const auto plan = p->call_once(TurnInput{});
    const double len = std::stod(plan.metadata.at("plan_length"));
    TurnInput nav;
    nav.task = "navigate";
    nav.actions = parse_action_list(plan.metadata.at("plan"));
    const auto env = p->call_once(nav);
    const double expected = cfg.kernel.goal_reward + cfg.kernel.step_cost * (len - 1);
    const double got = parse_double(env.metadata.at("cumulative_reward"));
    worst = std::max(worst, std::abs(got - expected));
    ++plan_total;
    if (env.terminal && std::abs(got - expected) <= kRewardTol) ++plan_ok;
  }
  Verdict o;
  o.pass = audio_ok == audio_total && plan_ok == plan_total;
  o.detail = fmt("audio %zu/%zu classified, act->navigate %zu/%zu terminal with reward formula (max err %.2g)",
                 audio_ok, audio_total, plan_ok, plan_total, worst);
  return o;
}

Verdict memory_law() {
  PipelineConfig cfg;
  cfg.seed = 10;
  auto p = Pipeline::build(cfg);
  const char* cycle[] = {"move_forward", "move_backward", "turn_left", "turn_right"};
  std::size_t ok = 0;
  for (std::size_t t = 0; t < kMemoryLawTurns; ++t) {
    TurnInput in;
    in.actions.emplace_back(std::string(cycle[t % 4]));
    if (p->call_once(in).ok()) ++ok;
  }
  const std::size_t records = p->memory().size(p->session_id());
  Verdict o;
  o.pass = ok == kMemoryLawTurns && records == 2 * kMemoryLawTurns && !p->state().terminal;
  o.detail = fmt("T=%zu successful turns, %zu records (expected %zu)", ok, records, 2 * kMemoryLawTurns);
  return o;
}

std::string session_free_digest(ResultEnvelope env) {
  const std::string prefix = env.session_id + ":";
  env.session_id.clear();
  for (auto& ref : env.memory_refs)
    if (ref.rfind(prefix, 0) == 0) ref = ref.substr(prefix.size());
  return wire::envelope_digest(env);
}

Verdict service_isolation() {
  const json cfg{{"config", {{"task", "navigate"}, {"seed", 12}, {"kernel", {{"p_slip", 0.25}}}}}};
  const char* tokens[] = {"move_forward", "move_right", "turn_left", "move_backward", "move_left", "turn_right"};
  std::vector<std::vector<json>> scripts(2);
  for (int i = 0; i < 12; ++i) {
    scripts[0].push_back({{"actions", {tokens[i % 6]}}});
    scripts[1].push_back({{"actions", {tokens[(i * 5 + 2) % 6]}}});
  }
  auto start = [] {
    auto reg = std::make_shared<SessionRegistry>();
    auto svc = std::make_unique<HttpService>(reg);
    const int port = svc->start_background();
    return std::make_pair(std::move(svc), port);
  };
  auto create = [&](httplib::Client& c) {
    auto r = c.Post("/sessions", cfg.dump(), "application/json");
    return r && r->status == 201 ? json::parse(r->body).at("session_id").get<std::string>() : std::string();
  };
  auto step = [](httplib::Client& c, const std::string& id, const json& body) {
    auto r = c.Post("/sessions/" + id + "/step", body.dump(), "application/json");
    return r && r->status == 200 ? session_free_digest(wire::envelope_from_json(json::parse(r->body))) : "error";
  };

  std::vector<std::vector<std::string>> serial(2), interleaved(2);
  for (int s = 0; s < 2; ++s) {
    auto [svc, port] = start();
    httplib::Client c("127.0.0.1", port);
    const auto id = create(c);
    for (const auto& body : scripts[static_cast<std::size_t>(s)]) serial[static_cast<std::size_t>(s)].push_back(step(c, id, body));
    svc->stop();
  }
  auto [svc, port] = start();
  httplib::Client c("127.0.0.1", port);
  const std::string ids[2] = {create(c), create(c)};
  for (std::size_t i = 0; i < scripts[0].size(); ++i)
    for (int s : {1, 0}) interleaved[static_cast<std::size_t>(s)].push_back(step(c, ids[s], scripts[static_cast<std::size_t>(s)][i]));

  int conflict = 0;
  {
    auto guard = svc->registry().try_begin_turn(ids[0]);
    auto r = c.Post("/sessions/" + ids[0] + "/step", scripts[0][0].dump(), "application/json");
    conflict = r ? r->status : -1;
  }
  auto after = c.Post("/sessions/" + ids[0] + "/step", scripts[0][0].dump(), "application/json");
  const int after_status = after ? after->status : -1;
  svc->stop();

  std::size_t same = 0, total = 0;
  for (int s = 0; s < 2; ++s)
    for (std::size_t i = 0; i < serial[static_cast<std::size_t>(s)].size(); ++i) {
      ++total;
      if (serial[static_cast<std::size_t>(s)][i] != "error" &&
          serial[static_cast<std::size_t>(s)][i] == interleaved[static_cast<std::size_t>(s)][i])
        ++same;
    }
  Verdict o;
  o.pass = same == total && conflict == 409 && after_status == 200;
  o.detail = fmt("%zu/%zu interleaved envelopes equal serial, concurrent step -> %d, next step -> %d", same, total,
                 conflict, after_status);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"transition normalization", transition_normalization},
      {"stochastic agreement", stochastic_agreement},
      {"determinism/replay", determinism_replay},
      {"revisit consistency", revisit_consistency},
      {"reconstruction exactness", reconstruction},
      {"depth oracle", depth_oracle},
      {"memory oracle", memory_oracle},
      {"planner optimality", planner_optimality},
      {"loop closures", loop_closures},
      {"pipeline memory law", memory_law},
      {"service isolation", service_isolation},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
