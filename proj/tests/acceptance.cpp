// Acceptance run. One PASS/FAIL line per criterion, detail lines indented.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prio/control.hpp"
#include "prio/error.hpp"
#include "prio/oracle.hpp"
#include "prio/priority.hpp"
#include "prio/scenario.hpp"
#include "prio/simulator.hpp"

using namespace prio;

namespace {

const std::string kData = PRIO_DATA_DIR;

// Tolerances.
constexpr double kMinThrottle = 0.99;
constexpr double kMaxRunSeconds = 30.0;
constexpr double kQueueSpikeFactor = 10.0;
constexpr double kOptimalitySeconds = 60.0;
constexpr double kMarginRepro = 1e-3;  // times D
constexpr double kBpLowRateRelDiff = 0.20;
constexpr double kNoBpEndQueue = 100.0;
constexpr double kBpEndQueue = 60.0;
constexpr double kFlatSlope = 0.005;  // robots per slot
constexpr int kEndWindow = 500;

int failures = 0;

void verdict(int id, bool ok, const std::string& what) {
  std::printf("%s %d %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class... A>
void detail(const char* fmt, A... a) {
  std::printf("  ");
  std::printf(fmt, a...);
  std::printf("\n");
}

Scenario scenario(const std::string& name, std::uint64_t seed) {
  Scenario s = load_scenario(kData + "/scenarios/" + name + ".yaml");
  s.seed = seed;
  return s;
}

Instance instance(const std::string& name) { return load_instance(kData + "/instances/" + name + ".yaml"); }
PriorityGraph graph(const std::string& name) { return read_graph_file(kData + "/instances/" + name + ".graph"); }

struct Timed {
  RunMetrics m;
  double seconds = 0.0;
};

Timed timed_run(const Scenario& s, std::ostream* trace = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed t;
  t.m = run_scenario(s, trace);
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

std::string digest_hex(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

double mean(const std::vector<double>& v) { return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double mean_queue(const std::vector<int>& q, std::size_t from, std::size_t to) {
  to = std::min(to, q.size());
  if (from >= to) return 0.0;
  return std::accumulate(q.begin() + from, q.begin() + to, 0.0) / static_cast<double>(to - from);
}

// Least-squares slope of q over [from, to).
double slope(const std::vector<int>& q, std::size_t from, std::size_t to) {
  to = std::min(to, q.size());
  const double n = static_cast<double>(to - from);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = from; k < to; ++k) {
    const double x = static_cast<double>(k), y = q[k];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<std::uint64_t> seed1_digests;  // deterministic, brake, noise

void criterion_1() {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Timed t = timed_run(scenario("deterministic_004", seed));
    const RunMetrics& m = t.m;
    detail("seed %llu: spawned %ld collisions %ld violations %ld throttle %.4f remaining %ld %.1fs",
           static_cast<unsigned long long>(seed), m.spawned, m.collisions, m.violations, m.throttle_fraction(),
           m.remaining, t.seconds);
    ok = ok && m.collisions == 0 && m.violations == 0 && m.throttle_fraction() >= kMinThrottle &&
         t.seconds < kMaxRunSeconds;
    if (seed == 1) seed1_digests.push_back(m.digest);
  }
  verdict(1, ok, "deterministic 8-path at 0.04: no collisions or violations, throttle >= 0.99, runs < 30 s");
}

void criterion_2() {
  const RunMetrics m = run_scenario(scenario("deterministic_008", 1));
  std::vector<int> window(m.queue.begin() + std::min<std::size_t>(1000, m.queue.size()),
                          m.queue.begin() + std::min<std::size_t>(2000, m.queue.size()));
  std::nth_element(window.begin(), window.begin() + window.size() / 2, window.end());
  const double median = window.empty() ? 0.0 : window[window.size() / 2];
  const int peak = m.queue.empty() ? 0 : *std::max_element(m.queue.begin(), m.queue.end());
  detail("median Q over [1000, 2000) %.0f, max Q %d, collisions %ld violations %ld", median, peak, m.collisions,
         m.violations);
  verdict(2, m.safe() && peak < kQueueSpikeFactor * median, "rate 0.08 for 10000 slots: max Q < 10 x early median");
}

void criterion_3() {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunMetrics m = run_scenario(scenario("brake_004", seed));
    detail("seed %llu: spawned %ld brake overrides %ld collisions %ld violations %ld accepted left %ld",
           static_cast<unsigned long long>(seed), m.spawned, m.brake_overrides, m.collisions, m.violations,
           m.accepted_remaining);
    ok = ok && m.collisions == 0 && m.violations == 0 && m.accepted_remaining == 0 && m.brake_overrides > 0;
    if (seed == 1) seed1_digests.push_back(m.digest);
  }
  verdict(3, ok, "brake regime p=0.02 q=0.1: safe, every accepted robot exits");
}

// Straight paths of length 20 crossing near the origin.
Instance random_instance(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> centre(-1.0, 1.0), heading(0.0, 3.14159265358979);
  Instance inst;
  inst.diameter = 1.0;
  for (int r = 0; r < n; ++r) {
    double th = heading(rng);
    // Keep every pair well away from parallel.
    bool close = true;
    while (close) {
      close = false;
      for (const PathGeometry& p : inst.paths) {
        const double d = std::fmod(std::abs(p.heading - th), 3.14159265358979);
        if (d < 0.4 || d > 3.14159265358979 - 0.4) close = true;
      }
      if (close) th = heading(rng);
    }
    const double cx = centre(rng), cy = centre(rng);
    inst.paths.push_back({r, {cx - 10.0 * std::cos(th), cy - 10.0 * std::sin(th)}, th, 0.0, 20.0});
  }
  return inst;
}

// Orients every conflicting pair along a random total order.
PriorityGraph random_acyclic(std::mt19937_64& rng, const SectionTable& sections, std::size_t n) {
  std::vector<RobotId> order(n);
  std::iota(order.begin(), order.end(), RobotId{0});
  std::shuffle(order.begin(), order.end(), rng);
  PriorityGraph g(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (sections.find(order[a], order[b])) g.add_edge(order[a], order[b]);
  return g;
}

void criterion_4() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> pos(3.0, 9.0);
  const double speeds[] = {0.5, 1.0};
  int passed = 0, total = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& [n, count] : {std::pair{2, 20}, std::pair{3, 10}}) {
    int made = 0;
    while (made < count) {
      const Instance inst = random_instance(rng, n);
      const SectionTable sections = instance_sections(inst);
      if (sections.all().empty()) continue;
      const PriorityGraph g = random_acyclic(rng, sections, n);
      Configuration x0(n);
      std::vector<double> v(n);
      for (int r = 0; r < n; ++r) {
        x0[r] = pos(rng);
        v[r] = speeds[rng() % 2];
      }
      if (in_completed_region(g, x0, sections)) continue;
      ++made;
      ++total;
      const OptimalityReport rep = check_velocity_optimality(sections, g, x0, v, kOptimalityMaxHorizon);
      if (rep.pass) {
        ++passed;
      } else {
        detail("%d robots: %s", n, rep.message.c_str());
      }
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail("%d of %d random instances optimal, horizon %d, %.2fs", passed, total, kOptimalityMaxHorizon, seconds);
  verdict(4, passed == total && total == 30 && seconds < kOptimalitySeconds,
          "velocity law optimal on 20 random pairs and 10 random triples");
}

struct Case {
  const char* inst;
  const char* graph;
};

const Case kCases[] = {{"single", "single"},
                       {"perpendicular_pair", "perpendicular_pair"},
                       {"common_point_triple", "acyclic_triple"},
                       {"common_point_triple", "deadlock_triangle"},
                       {"triangle_triple", "triangle_deadlock_free"},
                       {"triangle_triple", "triangle_deadlock"}};

void criterion_5() {
  bool ok = true;
  for (const Case& c : kCases) {
    const Instance inst = instance(c.inst);
    const PriorityGraph g = graph(c.graph);
    const SectionTable sections = instance_sections(inst);
    const MarginReport a = feasibility_and_margin(g, sections);
    const MarginReport b = feasibility_and_margin(g, sections);
    MarginOptions fine;
    fine.resolution_factor = 1e-5;
    const MarginReport f = feasibility_and_margin(g, sections, fine);
    const GridFeasibility grid = grid_feasibility(inst.paths, inst.diameter, g, 48);
    const bool witness_ok = a.feasible ? !a.witness_cycle : (a.witness_cycle && !a.witness_cycle->empty());
    const double tol = kMarginRepro * inst.diameter;
    const bool repro = std::abs(a.margin - b.margin) <= tol && std::abs(a.margin - f.margin) <= tol;
    detail("%s / %s: feasible %d grid %d margin %.6f (fine %.6f)%s", c.inst, c.graph, a.feasible, grid.feasible,
           a.margin, f.margin, a.witness_cycle ? " witness" : "");
    ok = ok && a.feasible == grid.feasible && witness_ok && repro;
  }
  verdict(5, ok, "feasibility matches the grid oracle, witness on failure, margin reproducible to 1e-3 D");
}

void criterion_6() {
  bool ok = true;
  RobotLimits lim;
  lim.v_max = 0.5;
  lim.u_max = 0.025;
  lim.u_min = -0.025;
  for (const Case& c : kCases) {
    const Instance inst = instance(c.inst);
    const PriorityGraph g = graph(c.graph);
    const SectionTable sections = instance_sections(inst);
    if (!feasibility_and_margin(g, sections).feasible) continue;
    const ClosedLoopRecord rec = closed_loop_record(sections, g, lim, 20000);
    const bool same = rec.reached && induce_priority_graph(rec.path, sections) == g;
    detail("%s / %s: reached %d in %ld slots, induced graph %s", c.inst, c.graph, rec.reached, rec.slots,
           same ? "matches" : "differs");
    ok = ok && same;
  }
  verdict(6, ok, "closed-loop trajectories induce their priority graph");
}

void criterion_7() {
  const RunMetrics m = run_scenario(scenario("noise_002", 1));
  seed1_digests.push_back(m.digest);
  detail("noise: spawned %ld collisions %ld violations %ld box collisions %ld escapes %ld remaining %ld", m.spawned,
         m.collisions, m.violations, m.box_collisions, m.box_escapes, m.remaining);
  const bool steady = m.safe() && m.remaining == 0;

  const Scenario ws = scenario("noise_window_002", 1);
  const RunMetrics w = run_scenario(ws);
  const long after = std::count_if(w.exit_slots.begin(), w.exit_slots.end(),
                                   [&](long k) { return k >= ws.noise.window_end; });
  detail("window: spawned %ld collisions %ld violations %ld escapes %ld remaining %ld exits after window %ld",
         w.spawned, w.collisions, w.violations, w.box_escapes, w.remaining, after);
  const bool window = w.violations == 0 && w.collisions == 0 && w.box_escapes == 0 && w.remaining == 0 && after > 0;
  verdict(7, steady && window, "bounded noise: safe, states inside boxes, all exit; robots resume after the window");
}

void criterion_8() {
  std::vector<double> bp_low, nobp_low;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const RunMetrics bp = run_scenario(scenario("bp_004", seed));
    const RunMetrics nb = run_scenario(scenario("nobp_004", seed));
    bp_low.push_back(mean_queue(bp.queue, 0, bp.queue.size()));
    nobp_low.push_back(mean_queue(nb.queue, 0, nb.queue.size()));
  }
  const double rel = std::abs(mean(bp_low) - mean(nobp_low)) / std::max(mean(nobp_low), 1e-9);
  detail("rate 0.04 mean Q: bp %.2f nobp %.2f (rel diff %.3f)", mean(bp_low), mean(nobp_low), rel);

  std::vector<double> bp_end, bp_slope, nb_end, nb_slope;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const RunMetrics bp = run_scenario(scenario("bp_012", seed));
    const RunMetrics nb = run_scenario(scenario("nobp_012", seed));
    const std::size_t len = bp.queue.size();
    bp_end.push_back(mean_queue(bp.queue, len - kEndWindow, len));
    bp_slope.push_back(slope(bp.queue, len / 2, len));
    nb_end.push_back(mean_queue(nb.queue, nb.queue.size() - kEndWindow, nb.queue.size()));
    nb_slope.push_back(slope(nb.queue, nb.queue.size() / 2, nb.queue.size()));
    detail("rate 0.12 seed %llu: bp end %.1f slope %.4f, nobp end %.1f slope %.4f",
           static_cast<unsigned long long>(seed), bp_end.back(), bp_slope.back(), nb_end.back(), nb_slope.back());
  }
  detail("rate 0.12 over seeds 1-4: bp end %.1f slope %.4f, nobp end %.1f slope %.4f", mean(bp_end), mean(bp_slope),
         mean(nb_end), mean(nb_slope));
  const bool low = rel < kBpLowRateRelDiff;
  const bool nobp_grows = mean(nb_end) > kNoBpEndQueue && mean(nb_slope) > 0.0;
  const bool bp_flat = mean(bp_end) < kBpEndQueue && std::abs(mean(bp_slope)) < kFlatSlope;
  detail("low rate %s, nobp grows %s, bp bounded %s", low ? "ok" : "no", nobp_grows ? "ok" : "no",
         bp_flat ? "ok" : "no");
  verdict(8, low && nobp_grows && bp_flat, "back-pressure bounds the queue at 0.12, matches plain policy at 0.04");
}

std::uint64_t fnv_rows(const std::string& trace) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::istringstream lines(trace);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    for (unsigned char c : line + "\n") {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void criterion_9() {
  bool ok = seed1_digests.size() == 3;
  const char* names[] = {"deterministic_004", "brake_004", "noise_002"};
  for (std::size_t i = 0; i < 3 && ok; ++i) {
    std::ostringstream trace;
    const RunMetrics m = run_scenario(scenario(names[i], 1), &trace);
    const std::uint64_t rows = fnv_rows(trace.str());
    detail("%s: first %s replay %s trace %s", names[i], digest_hex(seed1_digests[i]).c_str(),
           digest_hex(m.digest).c_str(), digest_hex(rows).c_str());
    ok = ok && m.digest == seed1_digests[i] && rows == m.digest;
  }
  verdict(9, ok, "replay with the same seed gives identical digests");
}

}  // namespace

int main() {
  void (*criteria[])() = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                          criterion_6, criterion_7, criterion_8, criterion_9};
  int id = 1;
  for (auto* c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      verdict(id, false, std::string("threw: ") + e.what());
    }
    ++id;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
