#include "prio/priority.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include "prio/error.hpp"

namespace prio {

PriorityGraph::PriorityGraph(std::size_t robots) : n_(robots), adj_(robots * robots, 0) {}

void PriorityGraph::add_edge(RobotId i, RobotId j) {
  if (i >= n_ || j >= n_) throw Error(ErrorCode::InvalidGraph, "edge endpoint outside vertex set");
  if (i == j) throw Error(ErrorCode::InvalidGraph, "self loop on robot " + std::to_string(i));
  if (adj_[j * n_ + i])
    throw Error(ErrorCode::InvalidGraph,
                "edge " + std::to_string(i) + " " + std::to_string(j) + " conflicts with its reverse");
  adj_[i * n_ + j] = 1;
}

void PriorityGraph::remove_edge(RobotId i, RobotId j) {
  if (i < n_ && j < n_) adj_[i * n_ + j] = 0;
}

bool PriorityGraph::has_edge(RobotId i, RobotId j) const {
  return i < n_ && j < n_ && adj_[i * n_ + j] != 0;
}

std::size_t PriorityGraph::edge_count() const {
  return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), 1));
}

std::vector<std::pair<RobotId, RobotId>> PriorityGraph::edges() const {
  std::vector<std::pair<RobotId, RobotId>> out;
  for (RobotId i = 0; i < n_; ++i)
    for (RobotId j = 0; j < n_; ++j)
      if (adj_[i * n_ + j]) out.emplace_back(i, j);
  return out;
}

std::vector<RobotId> PriorityGraph::predecessors(RobotId i) const {
  std::vector<RobotId> out;
  for (RobotId j = 0; j < n_; ++j)
    if (adj_[j * n_ + i]) out.push_back(j);
  return out;
}

std::vector<RobotId> PriorityGraph::successors(RobotId i) const {
  std::vector<RobotId> out;
  for (RobotId j = 0; j < n_; ++j)
    if (adj_[i * n_ + j]) out.push_back(j);
  return out;
}

PriorityGraph parse_graph(std::istream& in) {
  std::vector<std::pair<long, long>> edges;
  std::optional<long> declared;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::InvalidGraph, "line " + std::to_string(lineno) + ": " + why);
    };
    if (word == "edge") {
      long i = -1, j = -1;
      if (!(ls >> i >> j) || i < 0 || j < 0) fail("expected `edge <i> <j>` with non-negative ids");
      edges.emplace_back(i, j);
    } else if (word == "robots") {
      long n = -1;
      if (!(ls >> n) || n < 0) fail("expected `robots <n>`");
      declared = n;
    } else {
      fail("unknown keyword '" + word + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing token '" + extra + "'");
  }
  long n = declared.value_or(0);
  for (auto [i, j] : edges) n = std::max({n, i + 1, j + 1});
  if (declared && n > *declared) throw Error(ErrorCode::InvalidGraph, "edge endpoint exceeds declared robot count");
  PriorityGraph g(static_cast<std::size_t>(n));
  for (auto [i, j] : edges) g.add_edge(static_cast<RobotId>(i), static_cast<RobotId>(j));
  return g;
}

PriorityGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open graph file " + path);
  return parse_graph(in);
}

void write_graph(std::ostream& out, const PriorityGraph& g) {
  out << "robots " << g.size() << '\n';
  for (auto [i, j] : g.edges()) out << "edge " << i << ' ' << j << '\n';
}

void validate_graph(const PriorityGraph& g, const SectionTable& sections) {
  if (g.size() > sections.size()) throw Error(ErrorCode::InvalidGraph, "graph has more robots than the instance");
  for (auto [i, j] : g.edges())
    if (!sections.find(i, j))
      throw Error(ErrorCode::InvalidGraph,
                  "edge " + std::to_string(i) + " " + std::to_string(j) + " joins a non-conflicting pair");
}

std::optional<std::vector<RobotId>> topological_order(const PriorityGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> indeg(n, 0);
  for (auto [i, j] : g.edges()) ++indeg[j];
  std::priority_queue<RobotId, std::vector<RobotId>, std::greater<>> ready;
  for (RobotId r = 0; r < n; ++r)
    if (indeg[r] == 0) ready.push(r);
  std::vector<RobotId> order;
  while (!ready.empty()) {
    const RobotId r = ready.top();
    ready.pop();
    order.push_back(r);
    for (RobotId s : g.successors(r))
      if (--indeg[s] == 0) ready.push(s);
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

std::vector<std::vector<RobotId>> elementary_cycles(const PriorityGraph& g, std::size_t limit) {
  const std::size_t n = g.size();
  std::vector<std::vector<RobotId>> cycles;
  std::vector<RobotId> stack;
  std::vector<bool> on_stack(n, false);

  std::function<void(RobotId, RobotId)> dfs = [&](RobotId start, RobotId v) {
    for (RobotId w : g.successors(v)) {
      if (w == start) {
        cycles.push_back(stack);
        if (cycles.size() > limit)
          throw Error(ErrorCode::CycleLimit, "more than " + std::to_string(limit) + " elementary cycles");
      } else if (w > start && !on_stack[w]) {
        on_stack[w] = true;
        stack.push_back(w);
        dfs(start, w);
        stack.pop_back();
        on_stack[w] = false;
      }
    }
  };

  for (RobotId s = 0; s < n; ++s) {
    stack.assign(1, s);
    on_stack[s] = true;
    dfs(s, s);
    on_stack[s] = false;
  }
  return cycles;
}

namespace {

std::vector<ThresholdParams> cycle_params(const std::vector<RobotId>& cycle, const SectionTable& sections,
                                          double inflation) {
  if (cycle.size() < 2) throw Error(ErrorCode::InvalidCycle, "cycle needs at least two robots");
  std::vector<ThresholdParams> params;
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    const RobotId hi = cycle[k];
    const RobotId lo = cycle[(k + 1) % cycle.size()];
    const CrossSection* cs = sections.find(hi, lo);
    if (!cs)
      throw Error(ErrorCode::InvalidCycle,
                  "no cross-section for cycle edge " + std::to_string(hi) + " " + std::to_string(lo));
    params.push_back(threshold_params(*cs, cs->first == hi, inflation));
  }
  return params;
}

double compose(const std::vector<ThresholdParams>& params, double x) {
  for (const auto& p : params) x = threshold_at(p, x);
  return x;
}

}  // namespace

CycleCheck cycle_obstruction_check(const std::vector<RobotId>& cycle, const SectionTable& sections,
                                   double inflation, std::size_t grid) {
  const auto params = cycle_params(cycle, sections, inflation);
  const CrossSection* first = sections.find(cycle[0], cycle[1]);
  const Interval b = first->bounds(first->first == cycle[0]);
  if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
    throw Error(ErrorCode::InvalidCycle, "unbounded section on cycle");
  grid = std::max<std::size_t>(grid, 3);

  const double lo = b.lo - std::abs(inflation);
  const double hi = b.hi + std::abs(inflation);
  const double step = (hi - lo) / static_cast<double>(grid - 1);
  std::vector<double> x0(grid), cur(grid), next(grid);
  for (std::size_t k = 0; k < grid; ++k) x0[k] = lo + step * static_cast<double>(k);
  cur = x0;
  for (const auto& p : params) {
    threshold_batch(p, cur.data(), next.data(), grid);
    cur.swap(next);
  }

  CycleCheck out;
  out.best_gap = -kInf;
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid; ++k) {
    const double gap = x0[k] - cur[k];
    if (gap > out.best_gap) {
      out.best_gap = gap;
      best = k;
    }
  }
  out.witness_start = x0[best];

  // Golden-section polish between the neighbours of the best sample.
  if (std::isfinite(out.best_gap)) {
    double a = x0[best == 0 ? 0 : best - 1];
    double c = x0[std::min(best + 1, grid - 1)];
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto gap_at = [&](double x) { return x - compose(params, x); };
    double x1 = c - phi * (c - a), x2 = a + phi * (c - a);
    double f1 = gap_at(x1), f2 = gap_at(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (c - a);
        f2 = gap_at(x2);
      } else {
        c = x2;
        x2 = x1;
        f2 = f1;
        x1 = c - phi * (c - a);
        f1 = gap_at(x1);
      }
    }
    if (f1 > out.best_gap) {
      out.best_gap = f1;
      out.witness_start = x1;
    }
    if (f2 > out.best_gap) {
      out.best_gap = f2;
      out.witness_start = x2;
    }
  }
  out.nonempty = out.best_gap > kMembershipEps;
  return out;
}

MarginReport feasibility_and_margin(const PriorityGraph& g, const SectionTable& sections,
                                    const MarginOptions& options) {
  validate_graph(g, sections);
  double diameter = 0.0;
  if (options.diameter) {
    diameter = *options.diameter;
  } else {
    for (const CrossSection* cs : sections.all())
      diameter = std::max(diameter, cs->kind == SectionKind::CrossingEllipse ? cs->diameter : cs->length);
  }
  if (!(diameter > 0.0)) diameter = 1.0;
  const double r_max = options.r_max_factor * diameter;
  const double resolution = options.resolution_factor * diameter;

  const auto cycles = elementary_cycles(g);
  MarginReport report;
  if (cycles.empty()) {
    report.feasible = true;
    report.margin = r_max;
    return report;
  }

  auto first_nonempty = [&](double r) -> const std::vector<RobotId>* {
    for (const auto& c : cycles)
      if (cycle_obstruction_check(c, sections, r, options.grid).nonempty) return &c;
    return nullptr;
  };

  if (const auto* witness = first_nonempty(0.0)) {
    report.feasible = false;
    report.witness_cycle = *witness;
    if (first_nonempty(-r_max)) {
      report.margin = -r_max;
      return report;
    }
    double lo = 0.0, hi = r_max;  // nonempty when eroded by lo, empty by hi
    while (hi - lo > resolution) {
      const double mid = 0.5 * (lo + hi);
      (first_nonempty(-mid) ? lo : hi) = mid;
    }
    report.margin = -hi;
    return report;
  }

  report.feasible = true;
  if (!first_nonempty(r_max)) {
    report.margin = r_max;
    return report;
  }
  double lo = 0.0, hi = r_max;  // empty at lo, nonempty at hi
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (first_nonempty(mid) ? hi : lo) = mid;
  }
  report.margin = lo;
  return report;
}

PriorityGraph local_priority_graph(const PriorityGraph& g, const Configuration& x, const SectionTable& sections,
                                   double radius) {
  PriorityGraph out(g.size());
  for (auto [i, j] : g.edges()) {
    const CrossSection* cs = sections.find(i, j);
    if (!cs) continue;
    const bool first_high = cs->first == i;
    const double thr = completion_threshold(*cs, first_high, x.at(i), radius);
    if (x.at(j) > thr + kMembershipEps) out.add_edge(i, j);
  }
  return out;
}

bool in_completed_region(const PriorityGraph& g, const Configuration& x, const SectionTable& sections) {
  for (auto [i, j] : g.edges()) {
    const CrossSection* cs = sections.find(i, j);
    if (cs && x.at(j) > completion_threshold(*cs, cs->first == i, x.at(i)) + kMembershipEps) return true;
  }
  return false;
}

namespace {

double default_resolution(const SectionTable& sections) {
  double res = kInf;
  for (const CrossSection* cs : sections.all())
    res = std::min(res, (cs->kind == SectionKind::CrossingEllipse ? cs->diameter : cs->length) / 32.0);
  return std::isfinite(res) ? res : 1.0;
}

// Calls visit(a, b) on the pair coordinates along the polyline, subdividing
// each segment so no coordinate moves more than `res` between checks.
template <class Visit>
void walk_pair(const DiscretizedPath& path, RobotId i, RobotId j, double res, Visit&& visit) {
  const auto& s = path.samples;
  if (s.empty()) return;
  visit(s[0].at(i), s[0].at(j));
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double a0 = s[k - 1].at(i), b0 = s[k - 1].at(j);
    const double da = s[k].at(i) - a0, db = s[k].at(j) - b0;
    const double span = std::max(std::abs(da), std::abs(db));
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(span / res)));
    for (std::size_t q = 1; q <= m; ++q) {
      const double t = static_cast<double>(q) / static_cast<double>(m);
      visit(a0 + t * da, b0 + t * db);
    }
  }
}

void check_monotone(const DiscretizedPath& path, std::size_t n) {
  for (std::size_t k = 0; k < path.samples.size(); ++k) {
    if (path.samples[k].size() != n) throw Error(ErrorCode::PathInfeasible, "sample dimension mismatch");
    if (k == 0) continue;
    for (std::size_t r = 0; r < n; ++r)
      if (path.samples[k][r] < path.samples[k - 1][r])
        throw Error(ErrorCode::PathInfeasible, "path is not monotone at sample " + std::to_string(k));
  }
}

}  // namespace

PriorityGraph induce_priority_graph(const DiscretizedPath& path, const SectionTable& sections,
                                    std::optional<double> resolution) {
  const std::size_t n = sections.size();
  check_monotone(path, n);
  const double res = resolution.value_or(default_resolution(sections));
  PriorityGraph g(n);
  for (RobotId i = 0; i < n; ++i) {
    for (RobotId j = i + 1; j < n; ++j) {
      const CrossSection* cs = sections.find(i, j);
      if (!cs) continue;
      const bool i_first = cs->first == i;
      bool i_before = false, j_before = false;
      walk_pair(path, i, j, res, [&](double a, double b) {
        const double xf = i_first ? a : b, xs = i_first ? b : a;
        if (cs->contains(xf, xs))
          throw Error(ErrorCode::PathInfeasible,
                      "robots " + std::to_string(i) + " and " + std::to_string(j) + " collide along the path");
        // i passes first when the path visits the region completed for j ≻ i.
        if (a > completion_threshold(*cs, !i_first, b) + kMembershipEps) i_before = true;
        if (b > completion_threshold(*cs, i_first, a) + kMembershipEps) j_before = true;
      });
      if (i_before && j_before)
        throw Error(ErrorCode::PathInfeasible,
                    "path visits both completions of pair " + std::to_string(i) + " " + std::to_string(j));
      if (!i_before && !j_before)
        throw Error(ErrorCode::UndeterminedPriority,
                    "no priority between robots " + std::to_string(i) + " and " + std::to_string(j));
      if (i_before)
        g.add_edge(i, j);
      else
        g.add_edge(j, i);
    }
  }
  return g;
}

DiscretizedPath construct_feasible_path(const PriorityGraph& g, const SectionTable& sections, double step,
                                        const PathOptions& options) {
  validate_graph(g, sections);
  if (!(step > 0.0)) throw Error(ErrorCode::InsufficientMargin, "step must be positive");
  const std::size_t n = g.size();
  const auto bounds = obstacle_bounds(sections.all(), sections.size());
  Configuration start(n, 0.0), goal(n, 0.0);
  for (RobotId r = 0; r < n; ++r) {
    if (std::isfinite(bounds[r].lo)) start[r] = bounds[r].lo;
    if (std::isfinite(bounds[r].hi)) goal[r] = bounds[r].hi + options.goal_offset;
  }

  DiscretizedPath path;
  if (auto order = topological_order(g)) {
    // Bound coordinates sit on the closure of both completions of a pair.
    for (RobotId r = 0; r < n; ++r) {
      if (std::isfinite(bounds[r].lo)) start[r] -= step;
      goal[r] += step;
    }
    Configuration x = start;
    path.samples.push_back(x);
    for (RobotId r : *order) {
      if (x[r] == goal[r]) continue;
      x[r] = goal[r];
      path.samples.push_back(x);
    }
    return path;
  }

  const MarginReport report = feasibility_and_margin(g, sections);
  if (!(report.margin > step))
    throw Error(ErrorCode::InsufficientMargin,
                "margin " + std::to_string(report.margin) + " does not exceed step " + std::to_string(step));

  Configuration x = start;
  double total = 0.0;
  for (RobotId r = 0; r < n; ++r) {
    if (std::isfinite(bounds[r].lo)) x[r] -= 2.0 * step;
    goal[r] += step;
    total += goal[r] - x[r];
  }
  const auto max_steps = std::min(options.max_steps, static_cast<std::size_t>(std::ceil(total / step)) + 1);
  path.samples.push_back(x);
  for (std::size_t it = 0; it < max_steps; ++it) {
    if (x == goal) break;
    const PriorityGraph local = local_priority_graph(g, x, sections, step);
    Configuration next = x;
    bool moved = false;
    for (RobotId r = 0; r < n; ++r) {
      if (x[r] >= goal[r] || !local.predecessors(r).empty()) continue;
      next[r] = std::min(goal[r], x[r] + step);
      moved = true;
    }
    if (!moved) throw Error(ErrorCode::InsufficientMargin, "flow stalled before reaching the goal");
    x = next;
    path.samples.push_back(x);
  }
  if (x != goal) throw Error(ErrorCode::InsufficientMargin, "flow did not reach the goal within the step bound");

  // Output check against the completed region of g.
  const double res = default_resolution(sections);
  for (auto [i, j] : g.edges()) {
    const CrossSection* cs = sections.find(i, j);
    const bool i_first = cs->first == i;
    walk_pair(path, i, j, res, [&](double a, double b) {
      if (b > completion_threshold(*cs, i_first, a) + kMembershipEps)
        throw Error(ErrorCode::PathInfeasible, "constructed path enters a completed region");
    });
  }
  return path;
}

}  // namespace prio
