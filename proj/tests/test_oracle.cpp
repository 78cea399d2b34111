#include <doctest.h>

#include <cmath>
#include <random>

#include "prio/control.hpp"
#include "prio/error.hpp"
#include "prio/oracle.hpp"
#include "prio/scenario.hpp"

using namespace prio;

namespace {

const std::string kData = PRIO_DATA_DIR;

Instance instance(const std::string& name) { return load_instance(kData + "/instances/" + name + ".yaml"); }
PriorityGraph graph(const std::string& name) { return read_graph_file(kData + "/instances/" + name + ".graph"); }

}  // namespace

TEST_CASE("centre completion on a perpendicular crossing") {
  const Instance inst = instance("perpendicular_pair");
  const auto& a = inst.paths[0];
  const auto& b = inst.paths[1];
  CHECK(centre_completion(a, b, 1.0, 0.0, 20.0));
  CHECK_FALSE(centre_completion(b, a, 1.0, 20.0, 0.0));
  CHECK_FALSE(centre_completion(a, b, 1.0, 11.5, 20.0));  // already past
  CHECK_FALSE(centre_completion(a, b, 1.0, 0.0, 8.5));    // still short
}

TEST_CASE("velocity law is optimal on the bundled pairs") {
  for (const char* name : {"single", "perpendicular_pair"}) {
    const Instance inst = instance(name);
    const SectionTable sections = instance_sections(inst);
    const OptimalityReport r = check_velocity_optimality(sections, graph(name), inst.start, inst.v_max, inst.horizon);
    CHECK(r.pass);
    CHECK(r.law_admissible);
    CHECK(r.reachable > 0);
    CHECK(r.law_steps.size() == static_cast<std::size_t>(inst.horizon) + 1);
  }
}

TEST_CASE("a lazier law is caught") {
  const Instance inst = instance("perpendicular_pair");
  const SectionTable sections = instance_sections(inst);
  const PriorityGraph g = graph("perpendicular_pair");
  // Robot 1 waits whenever the true law lets it move while robot 0 moves.
  auto lazy = [&](const Configuration& x) {
    ControlDecision f = velocity_law(x, inst.v_max, g, sections);
    if (f[0] > 0.0 && f[1] > 0.0) f[1] = 0.0;
    return f;
  };
  const OptimalityReport r = check_velocity_optimality(sections, g, inst.start, inst.v_max, inst.horizon, lazy);
  CHECK_FALSE(r.pass);
  CHECK_FALSE(r.counterexample.empty());

  // One that ignores the priority walks into the completion.
  auto reckless = [&](const Configuration&) { return ControlDecision(inst.v_max.begin(), inst.v_max.end()); };
  const OptimalityReport bad =
      check_velocity_optimality(sections, g, inst.start, inst.v_max, inst.horizon, reckless);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.law_admissible);
}

TEST_CASE("random perpendicular pairs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(4.0, 9.0), angle(0.5, 2.6);
  for (int trial = 0; trial < 6; ++trial) {
    Instance inst;
    inst.paths = {{0, {-10.0, 0.0}, 0.0, 0.0, 20.0}};
    const double th = angle(rng);
    inst.paths.push_back({1, {-10.0 * std::cos(th), -10.0 * std::sin(th)}, th, 0.0, 20.0});
    const SectionTable sections = instance_sections(inst);
    PriorityGraph g(2);
    g.add_edge(trial % 2, 1 - trial % 2);
    const Configuration x0{pos(rng), pos(rng)};
    if (in_completed_region(g, x0, sections)) continue;
    const std::vector<double> v{1.0, 0.5 * (1 + trial % 2)};
    CHECK(check_velocity_optimality(sections, g, x0, v, 10).pass);
  }
}

TEST_CASE("optimality oracle refuses large instances") {
  const Instance inst = instance("common_point_triple");
  const SectionTable sections = instance_sections(inst);
  const std::vector<double> v(3, 0.5);
  CHECK_THROWS_AS(check_velocity_optimality(sections, graph("acyclic_triple"), {0, 0, 0}, v, 13), Error);
  Instance four = inst;
  four.paths.push_back({3, {0.0, -10.0}, 1.5707963267948966, 0.0, 20.0});
  const SectionTable s4 = instance_sections(four);
  CHECK_THROWS_AS(check_velocity_optimality(s4, PriorityGraph(4), {0, 0, 0, 0}, {0.5, 0.5, 0.5, 0.5}, 5), Error);
}

TEST_CASE("grid search agrees with the cycle test") {
  const struct {
    const char* inst;
    const char* graph;
    bool feasible;
  } cases[] = {{"common_point_triple", "acyclic_triple", true},
               {"common_point_triple", "deadlock_triangle", false},
               {"triangle_triple", "triangle_deadlock_free", true},
               {"triangle_triple", "triangle_deadlock", false}};
  for (const auto& c : cases) {
    const Instance inst = instance(c.inst);
    const PriorityGraph g = graph(c.graph);
    const GridFeasibility grid = grid_feasibility(inst.paths, inst.diameter, g, 48);
    CHECK(grid.feasible == c.feasible);
    CHECK(grid.visited > 0);
    CHECK(feasibility_and_margin(g, instance_sections(inst)).feasible == c.feasible);
  }
}

TEST_CASE("grid margin of an infeasible cycle is negative") {
  const Instance inst = instance("common_point_triple");
  const double m = grid_margin(inst.paths, inst.diameter, graph("deadlock_triangle"), 48, 10.0, 1e-2);
  CHECK(m < 0.0);
  CHECK(grid_margin(inst.paths, inst.diameter, graph("acyclic_triple"), 48, 10.0, 1e-2) == 10.0);
}
