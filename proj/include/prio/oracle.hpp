#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prio/control.hpp"
#include "prio/coordspace.hpp"
#include "prio/dynamics.hpp"
#include "prio/priority.hpp"

namespace prio {

// Brute-force checks that share no region code with the library: collisions
// come from the Euclidean distance between robot centres.

// True iff some a >= x_high and b <= x_low put the two centres closer than D.
bool centre_completion(const PathGeometry& high, const PathGeometry& low, double diameter, double x_high,
                       double x_low);

inline constexpr int kOptimalityMaxRobots = 3;
inline constexpr int kOptimalityMaxHorizon = 12;

using VelocityLawFn = std::function<ControlDecision(const Configuration&)>;

struct OptimalityReport {
  bool pass = false;
  bool law_admissible = true;
  std::size_t reachable = 0;                   // admissible joint states over all slots
  std::vector<std::vector<int>> law_steps;     // per slot, steps taken by each robot
  std::vector<std::vector<int>> counterexample;  // admissible step counts beating the law
  std::string message;
};

// Enumerates every binary velocity control over `horizon` slots (as a reachable
// set of integer step counts) and checks that the law's trajectory dominates
// each admissible one at every slot. `law` defaults to velocity_law.
OptimalityReport check_velocity_optimality(const SectionTable& sections, const PriorityGraph& g,
                                           const Configuration& x0, const std::vector<double>& v_max, int horizon,
                                           const VelocityLawFn& law = {});

inline constexpr std::size_t kGridMaxRobots = 4;

struct GridFeasibility {
  bool feasible = false;
  std::size_t cells = 0;
  std::size_t visited = 0;
};

// Monotone staircase search on an n-D grid through the complement of the
// completed regions of g.
GridFeasibility grid_feasibility(const std::vector<PathGeometry>& paths, double diameter, const PriorityGraph& g,
                                 std::size_t grid);

// Grid search for a point common to the inflated completions along a cycle.
bool grid_cycle_nonempty(const std::vector<PathGeometry>& paths, double diameter,
                         const std::vector<RobotId>& cycle, double inflation, std::size_t grid);

// Largest r (to `resolution`) keeping every cycle of g empty on the grid;
// r_max when g is acyclic.
double grid_margin(const std::vector<PathGeometry>& paths, double diameter, const PriorityGraph& g,
                   std::size_t grid, double r_max, double resolution);

struct ClosedLoopRecord {
  DiscretizedPath path;
  bool reached = false;
  long slots = 0;
};

// Runs acceleration_law from rest just below the obstacle bounds until every
// robot is past its upper bound, recording the configuration each slot.
ClosedLoopRecord closed_loop_record(const SectionTable& sections, const PriorityGraph& g, const RobotLimits& limits,
                                    long max_slots);

}  // namespace prio
