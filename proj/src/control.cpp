#include "prio/control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prio/error.hpp"

namespace prio {

ConstraintLists constraints_from(const PriorityGraph& g, const SectionTable& sections) {
  ConstraintLists out(g.size());
  for (auto [i, j] : g.edges()) {
    const CrossSection* cs = sections.find(i, j);
    if (!cs)
      throw Error(ErrorCode::InvalidGraph,
                  "edge " + std::to_string(i) + " " + std::to_string(j) + " joins a non-conflicting pair");
    out[j].push_back({i, cs, cs->first == i});
  }
  return out;
}

bool staggered_enters(const CrossSection& cs, bool high_is_first, std::span<const double> x_high,
                      std::span<const double> x_low, double guard) {
  if (x_high.empty() || x_low.empty()) return false;
  thread_local std::vector<double> thr;
  thr.resize(x_high.size());
  threshold_batch(threshold_params(cs, high_is_first), x_high.data(), thr.data(), x_high.size());
  const std::size_t nh = x_high.size(), nl = x_low.size();
  const std::size_t last = std::max<std::size_t>({nh - 1, nl >= 2 ? nl - 2 : 0, 0});
  for (std::size_t t = 0; t <= last; ++t) {
    const double h = thr[std::min(t, nh - 1)];
    const double l = x_low[std::min(t + 1, nl - 1)];
    if (l > h + guard) return true;
  }
  return false;
}

bool segment_enters(const CrossSection& cs, bool high_is_first, double high0, double low0, double high1,
                    double low1) {
  const ThresholdParams p = threshold_params(cs, high_is_first);
  const double dh = high1 - high0, dl = low1 - low0;
  auto gap = [&](double t) { return (low0 + t * dl) - threshold_at(p, high0 + t * dh); };
  auto inside = [&](double t) { return gap(t) > kMembershipEps; };

  if (inside(0.0) || inside(1.0)) return true;
  if (dh <= 0.0 || dl <= 0.0) return false;  // the worst point is an endpoint

  // The threshold is convex where finite, so the gap is concave on [0, t_end).
  double t_end = 1.0;
  if (!std::isfinite(threshold_at(p, high1))) {
    double lo = 0.0, hi = 1.0;
    if (!std::isfinite(threshold_at(p, high0))) return false;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (std::isfinite(threshold_at(p, high0 + mid * dh)) ? lo : hi) = mid;
    }
    t_end = lo;
    if (inside(t_end)) return true;
  }
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, c = t_end;
  double x1 = c - phi * (c - a), x2 = a + phi * (c - a);
  double f1 = gap(x1), f2 = gap(x2);
  for (int it = 0; it < 100; ++it) {
    if (f1 > kMembershipEps || f2 > kMembershipEps) return true;
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (c - a);
      f2 = gap(x2);
    } else {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - phi * (c - a);
      f1 = gap(x1);
    }
  }
  return f1 > kMembershipEps || f2 > kMembershipEps;
}

ControlDecision velocity_law(const Configuration& x, std::span<const double> v_max, const PriorityGraph& g,
                             const SectionTable& sections, const VelocityLawOptions& options) {
  const std::size_t n = g.size();
  if (x.size() != n || v_max.size() != n) throw Error(ErrorCode::InvalidControl, "dimension mismatch");
  if (in_completed_region(g, x, sections))
    throw Error(ErrorCode::PriorityViolated, "configuration lies in the completed obstacle region");

  PriorityGraph local = g;
  auto order = topological_order(g);
  if (!order) {
    const double margin = options.margin ? *options.margin : feasibility_and_margin(g, sections).margin;
    const double fastest = *std::max_element(v_max.begin(), v_max.end());
    if (!(fastest <= margin))
      throw Error(ErrorCode::UnsupportedPriorities, "cyclic priorities need max v_max <= margin");
    local = local_priority_graph(g, x, sections, margin);
    order = topological_order(local);
    if (!order) throw Error(ErrorCode::UnsupportedPriorities, "local priority graph is cyclic");
  }

  ControlDecision f(n, 0.0);
  for (RobotId i : *order) {
    f[i] = v_max[i];
    for (RobotId j : local.predecessors(i)) {
      const CrossSection* cs = sections.find(j, i);
      if (segment_enters(*cs, cs->first == j, x[j], x[i], x[j] + f[j], x[i] + v_max[i])) {
        f[i] = 0.0;
        break;
      }
    }
  }
  return f;
}

namespace {

struct Trajectories {
  std::vector<std::vector<double>> high;  // brake flow, used when the robot has priority
  std::vector<std::vector<double>> low;   // flow of the robot being decided or checked
};

bool any_edge_enters(const ConstraintLists& c, const Trajectories& t, std::size_t i, double guard) {
  for (const Constraint& k : c[i])
    if (staggered_enters(*k.section, k.high_is_first, t.high[k.high], t.low[i], guard)) return true;
  return false;
}

void check_sizes(std::size_t a, std::size_t b, std::size_t cc) {
  if (a != b || a != cc) throw Error(ErrorCode::InvalidControl, "dimension mismatch");
}

}  // namespace

bool nd_is_brake_safe(std::span<const NDState> s, std::span<const RobotLimits> limits, const ConstraintLists& c,
                      double guard) {
  check_sizes(s.size(), limits.size(), c.size());
  Trajectories t{std::vector<std::vector<double>>(s.size()), std::vector<std::vector<double>>(s.size())};
  for (std::size_t r = 0; r < s.size(); ++r) {
    worst_case_positions(s[r].lo, limits[r], limits[r].d_lo, 0, t.high[r]);
    worst_case_positions(s[r].hi, limits[r], limits[r].d_hi, 0, t.low[r]);
  }
  for (std::size_t r = 0; r < s.size(); ++r)
    if (any_edge_enters(c, t, r, guard)) return false;
  return true;
}

ControlDecision nd_law(std::span<const NDState> s, std::span<const RobotLimits> limits, const ConstraintLists& c) {
  check_sizes(s.size(), limits.size(), c.size());
  Trajectories t{std::vector<std::vector<double>>(s.size()), std::vector<std::vector<double>>(s.size())};
  for (std::size_t r = 0; r < s.size(); ++r) {
    worst_case_positions(s[r].lo, limits[r], limits[r].d_lo, 0, t.high[r]);
    if (!c[r].empty()) worst_case_positions(s[r].hi, limits[r], limits[r].d_hi, 1, t.low[r]);
  }
  ControlDecision u(s.size());
  for (std::size_t r = 0; r < s.size(); ++r)
    u[r] = any_edge_enters(c, t, r, kLawGuard) ? limits[r].u_min : limits[r].u_max;
  return u;
}

namespace {

std::vector<NDState> points(std::span<const State> s) {
  std::vector<NDState> out;
  out.reserve(s.size());
  for (const State& x : s) out.push_back(NDState::point(x));
  return out;
}

std::vector<RobotLimits> noiseless(std::span<const RobotLimits> limits) {
  std::vector<RobotLimits> out(limits.begin(), limits.end());
  for (auto& l : out) l.d_lo = l.d_hi = Disturbance{};
  return out;
}

}  // namespace

bool is_brake_safe(std::span<const State> s, std::span<const RobotLimits> limits, const ConstraintLists& c,
                   double guard) {
  return nd_is_brake_safe(points(s), noiseless(limits), c, guard);
}

bool is_brake_safe(std::span<const State> s, std::span<const RobotLimits> limits, const PriorityGraph& g,
                   const SectionTable& sections, double guard) {
  return is_brake_safe(s, limits, constraints_from(g, sections), guard);
}

ControlDecision acceleration_law(std::span<const State> s, std::span<const RobotLimits> limits,
                                 const ConstraintLists& c) {
  return nd_law(points(s), noiseless(limits), c);
}

ControlDecision acceleration_law(std::span<const State> s, std::span<const RobotLimits> limits,
                                 const PriorityGraph& g, const SectionTable& sections) {
  return acceleration_law(s, limits, constraints_from(g, sections));
}

ControlDecision nd_law(std::span<const NDState> s, std::span<const RobotLimits> limits, const PriorityGraph& g,
                       const SectionTable& sections) {
  return nd_law(s, limits, constraints_from(g, sections));
}

}  // namespace prio
