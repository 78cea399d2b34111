#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace prio {

struct Disturbance {
  double dv = 0.0;  // acts on position only while v == v_max
  double du = 0.0;
};

struct RobotLimits {
  double v_max = 1.0;
  double u_max = 0.05;
  double u_min = -0.05;
  Disturbance d_lo;  // componentwise <= 0
  Disturbance d_hi;  // componentwise >= 0
  double sigma_x = 0.0;
  double sigma_v = 0.0;

  // Throws Error(Config) when the bounds or noise assumptions do not hold.
  void validate() const;
};

struct State {
  double x = 0.0;
  double v = 0.0;

  bool operator==(const State&) const = default;
};

struct NDState {
  State lo;
  State hi;

  static NDState point(const State& s) { return {s, s}; }
  State mean() const { return {0.5 * (lo.x + hi.x), 0.5 * (lo.v + hi.v)}; }
  bool contains(const State& s) const { return lo.x <= s.x && s.x <= hi.x && lo.v <= s.v && s.v <= hi.v; }
};

// Piecewise-constant velocity in {0, v_max} per slot.
double flow_velocity(double x0, std::span<const double> velocities, double t);

// One slot, or the first `tau` of it, of the clamped double integrator under a
// constant control and disturbance. Closed form with at most two segments.
State advance(const State& s, double u, const Disturbance& d, const RobotLimits& limits, double tau = 1.0);

// Controls and disturbances are per slot; when `d` is empty no noise is applied.
// Slots beyond the supplied controls reuse the last one.
State flow_second_order(const State& s0, std::span<const double> u, std::span<const Disturbance> d, double t,
                        const RobotLimits& limits);

// Lower envelope of one slot for a non-positive velocity disturbance: the
// position rate is min(v, v_max + d.dv), which bounds every admissible
// trajectory from below and stays monotone in the initial state.
State advance_lower(const State& s, double u, const Disturbance& d, const RobotLimits& limits);

inline constexpr std::size_t kMaxStopSlots = 100000;

// ceil(v_max / |u_min|) + 1
std::size_t stop_horizon(const RobotLimits& limits);

// Positions at integer times 0, 1, ... until the robot is stopped after the
// brake phase; the last entry is the stop position. `throttle_slots` slots of
// u_max come first (1 for the impulse control, 0 for pure braking).
void worst_case_positions(const State& s, const RobotLimits& limits, const Disturbance& d, int throttle_slots,
                          std::vector<double>& out);

struct ImpulseExtent {
  double distance = 0.0;  // x_stop - x
  std::size_t slots = 0;  // slots until standstill, impulse slot included
};

ImpulseExtent impulse_extent(const RobotLimits& limits, const State& s = {},
                             const Disturbance& d = {});

inline double stop_position(const RobotLimits& limits, const State& s, const Disturbance& d = {}) {
  return s.x + impulse_extent(limits, s, d).distance;
}

// Box propagation by order preservation, intersected with the observation box
// when one is given.
NDState nd_propagate(const NDState& box, double u, const RobotLimits& limits,
                     const std::optional<NDState>& observation = std::nullopt);

}  // namespace prio
