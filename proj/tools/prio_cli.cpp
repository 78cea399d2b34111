// Command-line front end: simulations, feasibility and margin queries, and the
// brute-force oracles. Exit codes: 0 pass, 1 property failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "prio/error.hpp"
#include "prio/oracle.hpp"
#include "prio/priority.hpp"
#include "prio/scenario.hpp"
#include "prio/simulator.hpp"

namespace {

using namespace prio;

struct Options {
  std::string scenario;
  std::string graph;
  std::optional<std::uint64_t> seed;
  std::optional<long> slots;
  std::optional<double> rate;
  std::optional<std::string> policy;
  std::string out;
  std::size_t grid = 96;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Scenario scenario_with_overrides(const Options& o) {
  Scenario s = load_scenario(o.scenario);
  if (o.seed) s.seed = *o.seed;
  if (o.slots) s.slots = *o.slots;
  if (o.rate) s.arrival_rate.assign(s.paths.size(), *o.rate);
  if (o.policy) {
    if (*o.policy == "exact") s.policy.kind = PolicyKind::Exact;
    else if (*o.policy == "heuristic") s.policy.kind = PolicyKind::Heuristic;
    else throw Error(ErrorCode::Config, "--policy: unknown policy '" + *o.policy + "'");
  }
  validate_scenario(s);
  return s;
}

void print_summary(const RunMetrics& m) {
  std::cout << "slots " << m.slots_run << "\nspawned " << m.spawned << "\naccepted " << m.accepted << "\nexited "
            << m.exited << "\nremaining " << m.remaining << "\ncollisions " << m.collisions << "\nviolations "
            << m.violations << "\nbox_collisions " << m.box_collisions << "\nbox_escapes " << m.box_escapes
            << "\nthrottle_fraction " << format_double(m.throttle_fraction()) << "\ndigest " << hex(m.digest)
            << '\n';
  if (!m.diagnostic.empty()) std::cout << "diagnostic " << m.diagnostic << '\n';
}

int simulate(const Options& o) {
  const Scenario s = scenario_with_overrides(o);
  std::ofstream trace;
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    trace.open(o.out + "/trace.csv");
    if (!trace) throw Error(ErrorCode::Config, "--out: cannot write " + o.out + "/trace.csv");
  }
  const RunMetrics m = run_scenario(s, o.out.empty() ? nullptr : &trace);
  if (!o.out.empty()) {
    std::ofstream metrics(o.out + "/metrics.csv");
    write_metrics(metrics, m);
  }
  print_summary(m);
  return m.safe() ? 0 : 1;
}

int replay_verify(const Options& o) {
  const Scenario s = scenario_with_overrides(o);
  const RunMetrics a = run_scenario(s);
  const RunMetrics b = run_scenario(s);
  std::cout << "digest_first " << hex(a.digest) << "\ndigest_second " << hex(b.digest) << '\n';
  const bool same = a.digest == b.digest;
  std::cout << (same ? "replay identical\n" : "replay differs\n");
  return same ? 0 : 1;
}

struct Loaded {
  Instance inst;
  SectionTable sections;
  PriorityGraph g;
};

Loaded load(const Options& o) {
  Instance inst = load_instance(o.scenario);
  SectionTable sections = instance_sections(inst);
  PriorityGraph g = read_graph_file(o.graph);
  if (g.size() != inst.paths.size())
    throw Error(ErrorCode::InvalidGraph, "graph has " + std::to_string(g.size()) + " robots, instance has " +
                                             std::to_string(inst.paths.size()));
  validate_graph(g, sections);
  return {std::move(inst), std::move(sections), std::move(g)};
}

void print_cycle(const char* label, const std::vector<RobotId>& c) {
  std::cout << label;
  for (RobotId r : c) std::cout << ' ' << r;
  std::cout << '\n';
}

int check_feasibility(const Options& o) {
  const Loaded l = load(o);
  const MarginReport r = feasibility_and_margin(l.g, l.sections, {l.inst.diameter});
  std::cout << "feasible " << (r.feasible ? "yes" : "no") << "\nmargin " << format_double(r.margin) << '\n';
  if (r.witness_cycle) print_cycle("witness", *r.witness_cycle);
  return r.feasible ? 0 : 1;
}

int margin(const Options& o) {
  const Loaded l = load(o);
  const MarginReport r = feasibility_and_margin(l.g, l.sections, {l.inst.diameter});
  std::cout << "margin " << format_double(r.margin) << '\n';
  return 0;
}

int oracle_optimality(const Options& o) {
  const Loaded l = load(o);
  const OptimalityReport r = check_velocity_optimality(l.sections, l.g, l.inst.start, l.inst.v_max, l.inst.horizon);
  std::cout << "reachable_states " << r.reachable << '\n';
  std::cout << "law_final_steps";
  for (int m : r.law_steps.back()) std::cout << ' ' << m;
  std::cout << '\n';
  if (!r.pass) {
    std::cout << "counterexample " << r.message << '\n';
    for (std::size_t k = 0; k < r.counterexample.size(); ++k) {
      std::cout << "  slot " << k << ':';
      for (int m : r.counterexample[k]) std::cout << ' ' << m;
      std::cout << '\n';
    }
  }
  std::cout << (r.pass ? "pass\n" : "fail\n");
  return r.pass ? 0 : 1;
}

int oracle_feasibility(const Options& o) {
  const Loaded l = load(o);
  if (l.inst.paths.size() > kGridMaxRobots)
    throw Error(ErrorCode::InstanceTooLarge, "grid oracle is limited to 4 robots");
  const MarginReport r = feasibility_and_margin(l.g, l.sections, {l.inst.diameter});
  const GridFeasibility grid = grid_feasibility(l.inst.paths, l.inst.diameter, l.g, o.grid);
  std::cout << "library " << (r.feasible ? "feasible" : "infeasible") << "\ngrid "
            << (grid.feasible ? "feasible" : "infeasible") << "\ngrid_cells " << grid.cells << "\nvisited "
            << grid.visited << '\n';
  const bool agree = r.feasible == grid.feasible;
  std::cout << (agree ? "agree\n" : "disagree\n");
  return agree ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"priority-based intersection coordination"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool graph) {
    sub->add_option("--scenario", o.scenario, graph ? "instance file" : "scenario file")->required();
    if (graph) sub->add_option("--graph", o.graph, "priority graph file")->required();
  };
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--slots", o.slots, "number of slots with arrivals");
    sub->add_option("--rate", o.rate, "arrival rate on every path");
    sub->add_option("--policy", o.policy, "exact or heuristic");
  };

  auto* sim = app.add_subcommand("simulate", "run a scenario and write trace and metrics");
  add_common(sim, false);
  add_overrides(sim);
  sim->add_option("--out", o.out, "output directory");

  auto* replay = app.add_subcommand("replay-verify", "run a scenario twice and compare digests");
  add_common(replay, false);
  add_overrides(replay);

  auto* feas = app.add_subcommand("check-feasibility", "feasibility and margin of a priority graph");
  add_common(feas, true);
  auto* marg = app.add_subcommand("margin", "safety margin of a priority graph");
  add_common(marg, true);
  auto* opt = app.add_subcommand("oracle-optimality", "exhaustive check of the velocity law");
  add_common(opt, true);
  auto* ofeas = app.add_subcommand("oracle-feasibility", "grid search against the feasibility test");
  add_common(ofeas, true);
  ofeas->add_option("--grid", o.grid, "grid points per axis")->check(CLI::Range(2, 4096));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return simulate(o);
    if (*replay) return replay_verify(o);
    if (*feas) return check_feasibility(o);
    if (*marg) return margin(o);
    if (*opt) return oracle_optimality(o);
    if (*ofeas) return oracle_feasibility(o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
