#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prio/coordspace.hpp"
#include "prio/dynamics.hpp"
#include "prio/intersection.hpp"
#include "prio/priority.hpp"

namespace prio {

struct NoiseProfile {
  bool enabled = false;
  // Per-robot bounds are drawn uniformly in [0, 2 * mean].
  double dv_mean = 0.0;
  double du_mean = 0.0;
  double sigma_x_mean = 0.0;
  double sigma_v_mean = 0.0;
  // Observation error on position scaled by `window_factor` for slots in
  // [window_start, window_end).
  long window_start = 0;
  long window_end = 0;
  double window_factor = 1.0;
};

struct Scenario {
  std::string layout = "eight-path";
  std::vector<PathGeometry> paths;
  std::vector<int> phases;
  double diameter = 1.0;
  double entry_offset = 6.0;  // in diameters
  double exit_offset = 6.0;
  RobotLimits limits{0.5, 0.025, -0.025, {}, {}, 0.0, 0.0};
  std::vector<double> arrival_rate;  // per path
  PolicyConfig policy;
  double p_brake = 0.0;    // normal -> brake, per robot and slot
  double q_release = 0.0;  // brake -> normal
  NoiseProfile noise;
  std::uint64_t seed = 1;
  long slots = 1000;
  // Extra slots without arrivals, stopping early once every robot has exited.
  long drain = 0;
};

// Eight straight paths: two lanes per direction, lanes 1.5 D apart, each path
// starting 14 D before the centre. Phase 1 is east/west, phase 2 north/south.
std::vector<PathGeometry> eight_path_layout(double diameter, std::vector<int>* phases = nullptr);
// One lane per direction.
std::vector<PathGeometry> four_path_layout(double diameter, std::vector<int>* phases = nullptr);

// Throws Error(Config) naming the offending field.
Scenario parse_scenario(const std::string& yaml_text);
Scenario load_scenario(const std::string& path);
void validate_scenario(const Scenario& s);

// Small coordination instance used by the feasibility and optimality tools.
struct Instance {
  std::string name;
  double diameter = 1.0;
  std::vector<PathGeometry> paths;
  Configuration start;         // optional, defaults to below every bound
  std::vector<double> v_max;   // optional, defaults to D / 2
  int horizon = 12;
};

Instance parse_instance(const std::string& yaml_text);
Instance load_instance(const std::string& path);
SectionTable instance_sections(const Instance& inst);

}  // namespace prio
