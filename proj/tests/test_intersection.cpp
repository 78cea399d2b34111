#include <doctest.h>

#include <vector>

#include "prio/error.hpp"
#include "prio/intersection.hpp"
#include "prio/scenario.hpp"

using namespace prio;

namespace {

RobotLimits sim_limits() {
  RobotLimits l;
  l.v_max = 0.5;
  l.u_max = 0.025;
  l.u_min = -0.025;
  return l;
}

// Four approaches, one lane each: 0 east, 1 west, 2 north, 3 south.
Layout four_paths() {
  std::vector<int> phases;
  auto paths = four_path_layout(1.0, &phases);
  return Layout(paths, 1.0, 6.0, 6.0, phases);
}

Agent agent(int id, int path, double x, double v, bool accepted = false) {
  return {id, path, NDState::point({x, v}), sim_limits(), accepted};
}

// Coordinate bounds of the crossing of `p` with `q`, on the axis of `p`.
Interval crossing_on(const Layout& layout, int p, int q) {
  const PairSection ps = layout.section(p, q);
  REQUIRE(ps);
  return ps.cs->bounds(ps.p_is_first);
}

PolicyConfig exact() { return PolicyConfig{}; }

PolicyConfig heuristic() {
  PolicyConfig p;
  p.kind = PolicyKind::Heuristic;
  return p;
}

}  // namespace

TEST_CASE("layout geometry") {
  const Layout layout = four_paths();
  CHECK(layout.path_count() == 4);
  CHECK_FALSE(layout.conflicts(0, 1));  // opposite lanes 1.5 D apart
  CHECK(layout.conflicts(0, 2));
  CHECK(layout.conflicts(0, 0));
  CHECK(layout.section(0, 0).cs->kind == SectionKind::SamePathBand);
  for (int p = 0; p < 4; ++p) {
    CHECK(layout.path(p).entry_pos == doctest::Approx(layout.bounds(p).lo - 6.0));
    CHECK(layout.path(p).exit_pos == doctest::Approx(layout.bounds(p).hi + 6.0));
  }
  // Both crossings of path 0, each 2 D wide on a perpendicular.
  CHECK(layout.bounds(0).hi - layout.bounds(0).lo == doctest::Approx(3.5));

  std::vector<PathGeometry> lonely{four_path_layout(1.0)[0], four_path_layout(1.0)[1]};
  CHECK_THROWS_AS(Layout(lonely, 1.0, 6.0, 6.0), Error);
}

TEST_CASE("empty intersection accepts") {
  const Layout layout = four_paths();
  IntersectionController ctrl(layout, exact());
  const std::vector<Agent> agents{agent(0, 0, layout.path(0).entry_pos, 0.5)};
  const RequestDecision d = ctrl.process(agents[0], agents, 0);
  CHECK(d.accepted);
  CHECK(ctrl.state().accepted == std::vector<int>{0});
  CHECK(ctrl.state().higher.at(0).empty());
}

TEST_CASE("non-conflicting paths get no edges") {
  const Layout layout = four_paths();
  IntersectionController ctrl(layout, exact());
  std::vector<Agent> agents{agent(0, 0, layout.path(0).entry_pos + 1.0, 0.5),
                            agent(1, 1, layout.path(1).entry_pos, 0.5)};
  REQUIRE(ctrl.process(agents[0], agents, 0).accepted);
  agents[0].accepted = true;
  const RequestDecision d = ctrl.process(agents[1], agents, 0);
  CHECK(d.accepted);
  CHECK(ctrl.state().higher.at(1).empty());
}

TEST_CASE("exact policy rejects a requester that cannot wait") {
  const Layout layout = four_paths();
  IntersectionController ctrl(layout, exact());
  // Robot 0 stands at the start of its crossing with path 0. From rest it needs
  // sqrt(2 * 2 / 0.025) ~ 12.6 slots to clear the 2 D crossing. The requester
  // runs at v_max from its entry, 7.5 from that crossing, with an impulse
  // extent of 0.5 + 0.25 / 0.05 = 5.5: it must commit after about 4 slots.
  const double j_lo = crossing_on(layout, 2, 0).lo;
  std::vector<Agent> agents{agent(0, 2, j_lo, 0.0), agent(1, 0, layout.path(0).entry_pos, 0.5)};
  REQUIRE(ctrl.process(agents[0], agents, 0).accepted);
  agents[0].accepted = true;
  const RequestDecision d = ctrl.process(agents[1], agents, 0);
  CHECK_FALSE(d.accepted);
  CHECK(d.reason == "conflict");

  // Far back and at rest the requester simply follows.
  agents[1] = agent(1, 0, layout.path(0).entry_pos - 30.0, 0.0);
  const RequestDecision later = ctrl.process(agents[1], agents, 0);
  CHECK(later.accepted);
  CHECK(ctrl.state().higher.at(1) == std::vector<int>{0});
}

TEST_CASE("heuristic policy compares arrival slots") {
  const Layout layout = four_paths();
  const Interval j_cross = crossing_on(layout, 2, 0);
  const Interval i_cross = crossing_on(layout, 0, 2);

  SUBCASE("far requester") {
    IntersectionController ctrl(layout, heuristic());
    std::vector<Agent> agents{agent(0, 2, j_cross.hi - 0.1, 0.5), agent(1, 0, layout.path(0).entry_pos - 20.0, 0.0)};
    REQUIRE(ctrl.process(agents[0], agents, 0).accepted);
    agents[0].accepted = true;
    CHECK(ctrl.process(agents[1], agents, 0).accepted);
  }
  SUBCASE("equal arrival slots accept") {
    // Both 1 D away at v_max: 2 slots each. The leader is past the crossing
    // before either could stop, so the joint state is brake safe.
    IntersectionController ctrl(layout, heuristic());
    std::vector<Agent> agents{agent(0, 2, j_cross.hi - 1.0, 0.5), agent(1, 0, i_cross.lo - 1.0, 0.5)};
    CHECK(IntersectionController::slots_to_reach(agents[0].box.lo, sim_limits(), j_cross.hi) ==
          IntersectionController::slots_to_reach(agents[1].box.lo, sim_limits(), i_cross.lo));
    REQUIRE(ctrl.process(agents[0], agents, 0).accepted);
    agents[0].accepted = true;
    CHECK(ctrl.process(agents[1], agents, 0).accepted);
  }
  SUBCASE("leader from rest blocks a fast requester") {
    IntersectionController ctrl(layout, heuristic());
    std::vector<Agent> agents{agent(0, 2, layout.path(2).entry_pos, 0.0), agent(1, 0, layout.path(0).entry_pos, 0.5)};
    REQUIRE(ctrl.process(agents[0], agents, 0).accepted);
    agents[0].accepted = true;
    const RequestDecision d = ctrl.process(agents[1], agents, 0);
    CHECK_FALSE(d.accepted);
    CHECK(d.reason == "tau");
  }
}

TEST_CASE("back-pressure phase") {
  const std::vector<int> phases{1, 1, 2, 2};
  const std::vector<int> balanced{10, 10, 10, 10}, heavy1{40, 20, 5, 5}, heavy2{0, 5, 30, 30};
  CHECK(backpressure_phase(balanced, phases, 30) == Phase::All);
  CHECK(backpressure_phase(heavy1, phases, 30) == Phase::P1);
  CHECK(backpressure_phase(heavy2, phases, 30) == Phase::P2);
}

TEST_CASE("phase gating rejects the idle approach") {
  const Layout layout = four_paths();
  PolicyConfig p = exact();
  p.backpressure = true;
  p.bp_period = 100;
  p.bp_threshold = 30;
  IntersectionController ctrl(layout, p);
  const std::vector<int> queues{40, 20, 5, 5};
  ctrl.tick(0, queues, {});
  CHECK(ctrl.state().phase == Phase::P1);
  const std::vector<Agent> agents{agent(0, 0, layout.path(0).entry_pos, 0.5), agent(1, 2, layout.path(2).entry_pos - 20.0, 0.0)};
  CHECK(ctrl.process(agents[1], agents, 0).reason == "phase");
  CHECK(ctrl.process(agents[0], agents, 0).accepted);
  CHECK(ctrl.state().accepted == std::vector<int>{0});

  // Only period boundaries re-evaluate.
  const std::vector<int> flipped{0, 0, 50, 50};
  ctrl.tick(50, flipped, {});
  CHECK(ctrl.state().phase == Phase::P1);
  ctrl.tick(100, flipped, {});
  CHECK(ctrl.state().phase == Phase::P2);
}

TEST_CASE("locking defers conflicting requests") {
  const Layout layout = four_paths();
  PolicyConfig p = exact();
  p.locking = true;
  p.lock_a = 1.0;
  p.lock_b = 2.0;
  p.lock_threshold = 2500.0;
  IntersectionController ctrl(layout, p);
  const std::vector<Agent> agents{agent(0, 2, layout.path(2).entry_pos - 10.0, 0.0),
                                  agent(1, 0, layout.path(0).entry_pos - 40.0, 0.0),
                                  agent(2, 1, layout.path(1).entry_pos - 10.0, 0.0)};
  const std::vector<int> queues{1, 1, 1, 0};
  const std::vector<WaitingRobot> starving{{0, 2, 60}, {1, 0, 10}};  // 60^2 > 2500
  ctrl.tick(1, queues, starving);
  REQUIRE(ctrl.state().lock_robot);
  CHECK(*ctrl.state().lock_robot == 0);
  CHECK(ctrl.process(agents[1], agents, 1).reason == "lock");
  CHECK(ctrl.process(agents[0], agents, 1).accepted);
  CHECK_FALSE(ctrl.state().lock_robot);
  CHECK(ctrl.process(agents[1], agents, 1).accepted);
}

TEST_CASE("constraints of accepted and waiting robots") {
  const Layout layout = four_paths();
  IntersectionController ctrl(layout, exact());
  std::vector<Agent> agents{agent(0, 2, layout.path(2).entry_pos - 30.0, 0.0),
                            agent(1, 0, layout.path(0).entry_pos - 40.0, 0.0),
                            agent(2, 0, layout.path(0).entry_pos - 50.0, 0.0)};
  REQUIRE(ctrl.process(agents[0], agents, 0).accepted);
  agents[0].accepted = true;
  REQUIRE(ctrl.process(agents[1], agents, 0).accepted);
  agents[1].accepted = true;
  const ConstraintLists c = ctrl.constraints(agents);
  CHECK(c[0].empty());
  REQUIRE(c[1].size() == 1);
  CHECK(c[1][0].high == 0);
  REQUIRE(c[2].size() == 1);  // car following behind robot 1
  CHECK(c[2][0].high == 1);
  CHECK(c[2][0].section->kind == SectionKind::SamePathBand);

  ctrl.remove(0);
  CHECK(ctrl.state().accepted == std::vector<int>{1});
  CHECK(ctrl.state().higher.at(1).empty());
}

TEST_CASE("arrival slot count") {
  const RobotLimits l = sim_limits();
  CHECK(IntersectionController::slots_to_reach({0.0, 0.5}, l, 2.0) == 4);
  CHECK(IntersectionController::slots_to_reach({3.0, 0.0}, l, 2.0) == 0);
  // From rest: 0.0125 k^2 >= 0.04 first at k = 2.
  CHECK(IntersectionController::slots_to_reach({0.0, 0.0}, l, 0.04) == 2);
}
