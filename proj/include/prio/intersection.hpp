#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prio/control.hpp"
#include "prio/coordspace.hpp"
#include "prio/dynamics.hpp"

namespace prio {

// Section between two paths, seen with `p` as the first argument.
struct PairSection {
  const CrossSection* cs = nullptr;
  bool p_is_first = true;

  explicit operator bool() const { return cs != nullptr; }
};

// Paths of one intersection with their pairwise sections. Distinct paths get
// crossing (or parallel-lane) sections; a path paired with itself gets an
// unbounded following band of length D. Entry and exit are placed
// `entry_offset` before the first and `exit_offset` after the last conflict
// coordinate of crossing sections.
class Layout {
 public:
  Layout(std::vector<PathGeometry> paths, double diameter, double entry_offset, double exit_offset,
         std::vector<int> phases = {});

  std::size_t path_count() const { return paths_.size(); }
  const PathGeometry& path(int p) const { return paths_.at(static_cast<std::size_t>(p)); }
  double diameter() const { return diameter_; }
  int phase(int p) const { return phases_.at(static_cast<std::size_t>(p)); }

  PairSection section(int p, int q) const;
  bool conflicts(int p, int q) const { return static_cast<bool>(section(p, q)); }
  // Obstacle bounds over crossing sections only.
  const Interval& bounds(int p) const { return bounds_.at(static_cast<std::size_t>(p)); }

  // Constraint of a low robot on path `low` with respect to the robot at
  // index `high_index` on path `high`.
  Constraint constraint(int high, int low, std::size_t high_index) const;

 private:
  std::vector<PathGeometry> paths_;
  double diameter_;
  std::vector<int> phases_;
  std::vector<std::optional<CrossSection>> sections_;  // p <= q, index p * n + q
  std::vector<Interval> bounds_;
};

// A live robot as seen by the controller and the laws. In deterministic runs
// the box is a point.
struct Agent {
  int id = 0;
  int path = 0;
  NDState box;
  RobotLimits limits;
  bool accepted = false;
};

enum class PolicyKind { Exact, Heuristic };
enum class Phase { All, P1, P2 };

const char* to_string(PolicyKind kind);
const char* to_string(Phase phase);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Exact;
  bool locking = false;
  double lock_a = 1.0;
  double lock_b = 2.0;
  double lock_threshold = 2500.0;
  bool backpressure = false;
  long bp_period = 100;
  int bp_threshold = 30;
  double delta = 0.0;
  long max_prediction = 400;
};

struct ControllerState {
  std::vector<int> accepted;               // ascending ids
  std::map<int, std::vector<int>> higher;  // edges (j, i) stored as higher[i] ∋ j
  std::vector<int> queues;                 // per path
  Phase phase = Phase::All;
  std::optional<int> lock_path;
  std::optional<int> lock_robot;
};

struct WaitingRobot {
  int id = 0;
  int path = 0;
  long wait = 0;
};

struct RequestDecision {
  bool accepted = false;
  std::string reason;
};

Phase backpressure_phase(std::span<const int> queues, std::span<const int> phases, int threshold);

class IntersectionController {
 public:
  IntersectionController(const Layout& layout, PolicyConfig policy);

  const ControllerState& state() const { return state_; }
  const PolicyConfig& policy() const { return policy_; }

  void tick(long slot, std::span<const int> queues, std::span<const WaitingRobot> waiting);

  // `agents` holds every live robot sorted by id, requester included.
  RequestDecision process(const Agent& requester, std::span<const Agent> agents, long slot);

  void remove(int id);

  // Index-based constraint lists for `agents` (sorted by id): assigned
  // priorities for accepted robots, car following behind the same-path
  // leader for the others.
  ConstraintLists constraints(std::span<const Agent> agents) const;

  // Slots until a robot under full throttle from `s` reaches `target`.
  static long slots_to_reach(const State& s, const RobotLimits& limits, double target);

 private:
  struct Prediction {
    std::vector<int> ids;
    std::vector<int> paths;
    std::vector<RobotLimits> limits;
    ConstraintLists constraints;
    std::vector<std::vector<NDState>> steps;
    std::vector<std::vector<std::vector<double>>> brakes;  // lazily filled
    long base_slot = 0;
    bool valid = false;
  };

  bool prediction_matches(std::span<const Agent> agents, long slot) const;
  void rebuild_prediction(std::span<const Agent> agents, long slot);
  const std::vector<NDState>& predicted(std::size_t k);
  const std::vector<double>& predicted_brake(std::size_t k, std::size_t m);

  RequestDecision exact_check(const Agent& req, std::span<const Agent> agents, long slot);
  RequestDecision heuristic_check(const Agent& req, std::span<const Agent> agents);
  bool post_validate(const Agent& req, std::span<const Agent> agents, const std::vector<int>& highs) const;
  std::vector<int> conflicting_accepted(const Agent& req, std::span<const Agent> agents) const;

  const Layout& layout_;
  PolicyConfig policy_;
  ControllerState state_;
  Prediction pred_;
};

const Agent* find_agent(std::span<const Agent> agents, int id);

}  // namespace prio
