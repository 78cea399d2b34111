#pragma once

#include <optional>
#include <span>
#include <vector>

#include "prio/coordspace.hpp"
#include "prio/dynamics.hpp"
#include "prio/priority.hpp"

namespace prio {

// One command per robot: a velocity in {0, v_max} or a control in {u_min, u_max}.
using ControlDecision = std::vector<double>;

// An incoming priority edge (high, low) seen from the low robot.
struct Constraint {
  std::size_t high = 0;
  const CrossSection* section = nullptr;
  bool high_is_first = true;
};

// constraints[i] lists the robots with priority over i.
using ConstraintLists = std::vector<std::vector<Constraint>>;

ConstraintLists constraints_from(const PriorityGraph& g, const SectionTable& sections);

// Offsets added to thresholds before the strict comparison. The laws flag a
// point slightly before the boundary, the checker slightly after, so rounding
// in the flows can never turn a law-approved motion into a flagged one.
inline constexpr double kLawGuard = -kMembershipEps;
inline constexpr double kCheckGuard = kMembershipEps;

// Staggered test on integer-time samples: true iff some pair
// (x_high(k), x_low(k+1)), the stopped tails included, lies in the completed
// region high ≻ low.
bool staggered_enters(const CrossSection& cs, bool high_is_first, std::span<const double> x_high,
                      std::span<const double> x_low, double guard);

// True iff some point of the segment from (high0, low0) to (high1, low1), both
// coordinates non-decreasing, lies in the completed region high ≻ low.
bool segment_enters(const CrossSection& cs, bool high_is_first, double high0, double low0, double high1,
                    double low1);

struct VelocityLawOptions {
  // Cyclic graphs: radius of the local priority graph. Computed with
  // feasibility_and_margin when absent.
  std::optional<double> margin;
};

ControlDecision velocity_law(const Configuration& x, std::span<const double> v_max, const PriorityGraph& g,
                             const SectionTable& sections, const VelocityLawOptions& options = {});

bool is_brake_safe(std::span<const State> s, std::span<const RobotLimits> limits, const ConstraintLists& c,
                   double guard = kLawGuard);
bool is_brake_safe(std::span<const State> s, std::span<const RobotLimits> limits, const PriorityGraph& g,
                   const SectionTable& sections, double guard = kLawGuard);

ControlDecision acceleration_law(std::span<const State> s, std::span<const RobotLimits> limits,
                                 const ConstraintLists& c);
ControlDecision acceleration_law(std::span<const State> s, std::span<const RobotLimits> limits,
                                 const PriorityGraph& g, const SectionTable& sections);

// Brake safety of every state in the boxes under the worst disturbance.
bool nd_is_brake_safe(std::span<const NDState> s, std::span<const RobotLimits> limits, const ConstraintLists& c,
                      double guard = kLawGuard);

ControlDecision nd_law(std::span<const NDState> s, std::span<const RobotLimits> limits, const ConstraintLists& c);
ControlDecision nd_law(std::span<const NDState> s, std::span<const RobotLimits> limits, const PriorityGraph& g,
                       const SectionTable& sections);

}  // namespace prio
