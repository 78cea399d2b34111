#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prio/coordspace.hpp"

namespace prio {

// Directed graph on robots 0..n-1; edge (i, j) means i passes before j.
class PriorityGraph {
 public:
  explicit PriorityGraph(std::size_t robots = 0);

  std::size_t size() const { return n_; }
  void add_edge(RobotId i, RobotId j);
  void remove_edge(RobotId i, RobotId j);
  bool has_edge(RobotId i, RobotId j) const;
  std::size_t edge_count() const;

  // Sorted lexicographically.
  std::vector<std::pair<RobotId, RobotId>> edges() const;
  std::vector<RobotId> predecessors(RobotId i) const;
  std::vector<RobotId> successors(RobotId i) const;

  bool operator==(const PriorityGraph& other) const = default;

 private:
  std::size_t n_;
  std::vector<unsigned char> adj_;
};

// Lines of the form `edge <i> <j>`; '#' starts a comment; an optional
// `robots <n>` line fixes the vertex count.
PriorityGraph parse_graph(std::istream& in);
PriorityGraph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const PriorityGraph& g);

// Every edge must join a conflicting pair.
void validate_graph(const PriorityGraph& g, const SectionTable& sections);

// Kahn's algorithm, smallest ready id first; nullopt when cyclic.
std::optional<std::vector<RobotId>> topological_order(const PriorityGraph& g);

inline constexpr std::size_t kCycleLimit = 10000;

// Each cycle starts at its smallest vertex; cycles are listed in DFS order.
std::vector<std::vector<RobotId>> elementary_cycles(const PriorityGraph& g, std::size_t limit = kCycleLimit);

struct CycleCheck {
  bool nonempty = false;
  double best_gap = 0.0;  // max over samples of x0 - H(x0)
  double witness_start = 0.0;
};

inline constexpr std::size_t kCycleGrid = 512;

CycleCheck cycle_obstruction_check(const std::vector<RobotId>& cycle, const SectionTable& sections,
                                   double inflation, std::size_t grid = kCycleGrid);

struct MarginOptions {
  std::optional<double> diameter;  // defaults to the largest section diameter
  double r_max_factor = 10.0;
  double resolution_factor = 1e-3;
  std::size_t grid = kCycleGrid;
};

struct MarginReport {
  bool feasible = false;
  double margin = 0.0;
  std::optional<std::vector<RobotId>> witness_cycle;
};

MarginReport feasibility_and_margin(const PriorityGraph& g, const SectionTable& sections,
                                    const MarginOptions& options = {});

PriorityGraph local_priority_graph(const PriorityGraph& g, const Configuration& x, const SectionTable& sections,
                                   double radius);

struct DiscretizedPath {
  std::vector<Configuration> samples;
};

// True iff x lies in the completed region of some edge of g.
bool in_completed_region(const PriorityGraph& g, const Configuration& x, const SectionTable& sections);

struct PathOptions {
  // Goal is the upper obstacle bound plus this offset.
  double goal_offset = 0.0;
  std::size_t max_steps = 1000000;
};

DiscretizedPath construct_feasible_path(const PriorityGraph& g, const SectionTable& sections, double step,
                                        const PathOptions& options = {});

// `resolution` bounds the coordinate increment between interpolated checks;
// defaults to 1/64 of the smallest section extent.
PriorityGraph induce_priority_graph(const DiscretizedPath& path, const SectionTable& sections,
                                    std::optional<double> resolution = std::nullopt);

}  // namespace prio
