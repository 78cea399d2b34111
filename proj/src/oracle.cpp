#include "prio/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "prio/error.hpp"

namespace prio {

namespace {

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double point_segment(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return 0.0;
  return std::min({point_segment(a, c, d), point_segment(b, c, d), point_segment(c, a, b), point_segment(d, a, b)});
}

struct Axis {
  double lo = 0.0;
  double step = 0.0;
  double at(std::size_t k) const { return lo + step * static_cast<double>(k); }
};

std::vector<Axis> grid_axes(const std::vector<PathGeometry>& paths, double diameter, std::size_t grid, double pad) {
  SectionOptions open;
  open.window_first = Interval{};
  open.window_second = Interval{};
  const SectionTable sections = SectionTable::from_paths(paths, diameter, open);
  const auto bounds = obstacle_bounds(sections.all(), paths.size());
  std::vector<Axis> axes;
  for (const Interval& b : bounds) {
    const double lo = std::isfinite(b.lo) ? b.lo - pad : 0.0;
    const double hi = std::isfinite(b.hi) ? b.hi + pad : 1.0;
    axes.push_back({lo, (hi - lo) / static_cast<double>(grid - 1)});
  }
  return axes;
}

// table[a * grid + b]: centre completion high ≻ low at grid points, after
// shifting to (x_high - r, x_low + r).
std::vector<unsigned char> completion_table(const PathGeometry& high, const PathGeometry& low, double diameter,
                                            const Axis& ah, const Axis& al, std::size_t grid, double r) {
  std::vector<unsigned char> t(grid * grid);
  for (std::size_t a = 0; a < grid; ++a)
    for (std::size_t b = 0; b < grid; ++b)
      t[a * grid + b] = centre_completion(high, low, diameter, ah.at(a) - r, al.at(b) + r) ? 1 : 0;
  return t;
}

}  // namespace

bool centre_completion(const PathGeometry& high, const PathGeometry& low, double diameter, double x_high,
                       double x_low) {
  const double reach = 1000.0 * diameter;
  const double d =
      segment_distance(high.point_at(x_high), high.point_at(x_high + reach), low.point_at(x_low - reach),
                       low.point_at(x_low));
  return d < diameter;
}

OptimalityReport check_velocity_optimality(const SectionTable& sections, const PriorityGraph& g,
                                           const Configuration& x0, const std::vector<double>& v_max, int horizon,
                                           const VelocityLawFn& law_fn) {
  const std::size_t n = g.size();
  if (n > static_cast<std::size_t>(kOptimalityMaxRobots) || horizon > kOptimalityMaxHorizon || horizon < 0)
    throw Error(ErrorCode::InstanceTooLarge, "optimality oracle is limited to " +
                                                 std::to_string(kOptimalityMaxRobots) + " robots and horizon " +
                                                 std::to_string(kOptimalityMaxHorizon));
  if (x0.size() != n || v_max.size() != n) throw Error(ErrorCode::Config, "start and v_max need one entry per robot");
  validate_graph(g, sections);

  using Steps = std::vector<int>;
  auto position = [&](const Steps& m) {
    Configuration x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = x0[i] + m[i] * v_max[i];
    return x;
  };
  auto admissible = [&](const Steps& from, const Steps& to) {
    const Configuration a = position(from), b = position(to);
    for (auto [j, i] : g.edges()) {
      const CrossSection* cs = sections.find(j, i);
      if (segment_enters(*cs, cs->first == j, a[j], a[i], b[j], b[i])) return false;
    }
    return true;
  };
  VelocityLawFn law = law_fn;
  if (!law) law = [&](const Configuration& x) { return velocity_law(x, v_max, g, sections); };

  OptimalityReport rep;
  Steps m(n, 0);
  rep.law_steps.push_back(m);
  for (int k = 0; k < horizon; ++k) {
    const ControlDecision f = law(position(m));
    Steps next = m;
    for (std::size_t i = 0; i < n; ++i)
      if (f[i] > 0.0) ++next[i];
    if (!admissible(m, next)) rep.law_admissible = false;
    m = next;
    rep.law_steps.push_back(m);
  }

  // Reachable admissible step counts with parent pointers.
  std::vector<std::map<Steps, Steps>> layers(static_cast<std::size_t>(horizon) + 1);
  layers[0][Steps(n, 0)] = Steps{};
  for (int k = 0; k < horizon; ++k) {
    for (const auto& [state, parent] : layers[static_cast<std::size_t>(k)]) {
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        Steps to = state;
        for (std::size_t i = 0; i < n; ++i)
          if (mask & (1u << i)) ++to[i];
        if (layers[static_cast<std::size_t>(k) + 1].count(to)) continue;
        if (admissible(state, to)) layers[static_cast<std::size_t>(k) + 1][to] = state;
      }
    }
  }

  rep.pass = rep.law_admissible;
  if (!rep.law_admissible) rep.message = "law trajectory leaves the admissible set";
  for (std::size_t k = 0; k < layers.size(); ++k) {
    rep.reachable += layers[k].size();
    if (!rep.counterexample.empty()) continue;
    for (const auto& [state, parent] : layers[k]) {
      bool beaten = false;
      for (std::size_t i = 0; i < n; ++i) beaten |= state[i] > rep.law_steps[k][i];
      if (!beaten) continue;
      rep.pass = false;
      Steps cur = state;
      for (std::size_t j = k + 1; j-- > 0;) {
        rep.counterexample.push_back(cur);
        if (j > 0) cur = layers[j].at(cur);
      }
      std::reverse(rep.counterexample.begin(), rep.counterexample.end());
      rep.message = "admissible control beats the law at slot " + std::to_string(k);
      break;
    }
  }
  return rep;
}

GridFeasibility grid_feasibility(const std::vector<PathGeometry>& paths, double diameter, const PriorityGraph& g,
                                 std::size_t grid) {
  const std::size_t n = paths.size();
  if (n > kGridMaxRobots) throw Error(ErrorCode::InstanceTooLarge, "grid oracle is limited to 4 robots");
  if (g.size() != n) throw Error(ErrorCode::InvalidGraph, "graph and instance sizes differ");
  if (grid < 2) throw Error(ErrorCode::Config, "grid needs at least 2 points per axis");
  const auto axes = grid_axes(paths, diameter, grid, 2.0 * diameter);

  struct EdgeTable {
    std::size_t high, low;
    std::vector<unsigned char> t;
  };
  std::vector<EdgeTable> tables;
  for (auto [i, j] : g.edges())
    tables.push_back({i, j, completion_table(paths[i], paths[j], diameter, axes[i], axes[j], grid, 0.0)});

  std::size_t cells = 1;
  for (std::size_t i = 0; i < n; ++i) cells *= grid;
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t i = 1; i < n; ++i) stride[i] = stride[i - 1] * grid;
  auto coord = [&](std::size_t cell, std::size_t i) { return (cell / stride[i]) % grid; };
  auto blocked = [&](std::size_t cell) {
    for (const auto& e : tables)
      if (e.t[coord(cell, e.high) * grid + coord(cell, e.low)]) return true;
    return false;
  };

  GridFeasibility out;
  out.cells = cells;
  std::vector<unsigned char> seen(cells, 0);
  std::deque<std::size_t> frontier;
  if (!blocked(0)) {
    frontier.push_back(0);
    seen[0] = 1;
  }
  while (!frontier.empty()) {
    const std::size_t c = frontier.front();
    frontier.pop_front();
    ++out.visited;
    if (c == cells - 1) {
      out.feasible = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (coord(c, i) + 1 >= grid) continue;
      const std::size_t nb = c + stride[i];
      if (seen[nb] || blocked(nb)) continue;
      seen[nb] = 1;
      frontier.push_back(nb);
    }
  }
  return out;
}

bool grid_cycle_nonempty(const std::vector<PathGeometry>& paths, double diameter,
                         const std::vector<RobotId>& cycle, double inflation, std::size_t grid) {
  const std::size_t k = cycle.size();
  if (k < 2 || k > kGridMaxRobots) throw Error(ErrorCode::InstanceTooLarge, "cycle grid oracle handles 2 to 4 robots");
  const auto axes = grid_axes(paths, diameter, grid, std::abs(inflation) + diameter);
  std::vector<std::vector<unsigned char>> tables;
  for (std::size_t e = 0; e < k; ++e) {
    const RobotId h = cycle[e], l = cycle[(e + 1) % k];
    tables.push_back(completion_table(paths[h], paths[l], diameter, axes[h], axes[l], grid, inflation));
  }
  std::vector<std::size_t> idx(k, 0);
  while (true) {
    bool all = true;
    for (std::size_t e = 0; e < k && all; ++e) all = tables[e][idx[e] * grid + idx[(e + 1) % k]] != 0;
    if (all) return true;
    std::size_t d = 0;
    while (d < k && ++idx[d] == grid) idx[d++] = 0;
    if (d == k) return false;
  }
}

double grid_margin(const std::vector<PathGeometry>& paths, double diameter, const PriorityGraph& g,
                   std::size_t grid, double r_max, double resolution) {
  const auto cycles = elementary_cycles(g);
  if (cycles.empty()) return r_max;
  auto empty = [&](double r) {
    for (const auto& c : cycles)
      if (grid_cycle_nonempty(paths, diameter, c, r, grid)) return false;
    return true;
  };
  double lo, hi;  // empty at lo, nonempty at hi
  if (empty(0.0)) {
    if (empty(r_max)) return r_max;
    lo = 0.0;
    hi = r_max;
  } else {
    if (!empty(-r_max)) return -r_max;
    lo = -r_max;
    hi = 0.0;
  }
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (empty(mid) ? lo : hi) = mid;
  }
  return lo;
}

ClosedLoopRecord closed_loop_record(const SectionTable& sections, const PriorityGraph& g, const RobotLimits& limits,
                                    long max_slots) {
  const std::size_t n = g.size();
  const auto all = sections.all();
  double diameter = 0.0;
  for (const CrossSection* cs : all) diameter = std::max(diameter, cs->diameter);
  const auto bounds = obstacle_bounds(all, n);
  std::vector<State> s(n);
  std::vector<double> goal(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i].x = std::isfinite(bounds[i].lo) ? bounds[i].lo - diameter : 0.0;
    goal[i] = std::isfinite(bounds[i].hi) ? bounds[i].hi + diameter : 0.0;
  }
  const std::vector<RobotLimits> lim(n, limits);
  const ConstraintLists c = constraints_from(g, sections);

  ClosedLoopRecord rec;
  auto snapshot = [&] {
    Configuration x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = s[i].x;
    rec.path.samples.push_back(x);
  };
  auto done = [&] {
    for (std::size_t i = 0; i < n; ++i)
      if (s[i].x <= goal[i]) return false;
    return true;
  };
  snapshot();
  for (rec.slots = 0; rec.slots < max_slots && !done(); ++rec.slots) {
    const ControlDecision u = acceleration_law(s, lim, c);
    for (std::size_t i = 0; i < n; ++i) s[i] = advance(s[i], u[i], {}, limits);
    snapshot();
  }
  rec.reached = done();
  return rec;
}

}  // namespace prio
