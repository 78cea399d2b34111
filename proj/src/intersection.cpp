#include "prio/intersection.hpp"

#include <algorithm>
#include <cmath>

#include "prio/error.hpp"

namespace prio {

const char* to_string(PolicyKind kind) { return kind == PolicyKind::Exact ? "exact" : "heuristic"; }

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::All: return "all";
    case Phase::P1: return "p1";
    case Phase::P2: return "p2";
  }
  return "all";
}

Layout::Layout(std::vector<PathGeometry> paths, double diameter, double entry_offset, double exit_offset,
               std::vector<int> phases)
    : paths_(std::move(paths)), diameter_(diameter), phases_(std::move(phases)) {
  const std::size_t n = paths_.size();
  if (n == 0) throw Error(ErrorCode::Config, "layout needs at least one path");
  if (phases_.empty()) phases_.assign(n, 0);
  if (phases_.size() != n) throw Error(ErrorCode::Config, "one phase label per path required");
  for (auto& p : paths_) {
    p.entry_pos = -1.0;
    p.exit_pos = 0.0;
  }

  SectionOptions open;
  open.window_first = Interval{};
  open.window_second = Interval{};
  sections_.resize(n * n);
  bounds_.assign(n, Interval{kInf, -kInf});
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      auto cs = build_cross_section(paths_[p], paths_[q], diameter, p, q, open);
      if (!cs) continue;
      if (cs->kind == SectionKind::CrossingEllipse) {
        bounds_[p].lo = std::min(bounds_[p].lo, cs->bounds_first.lo);
        bounds_[p].hi = std::max(bounds_[p].hi, cs->bounds_first.hi);
        bounds_[q].lo = std::min(bounds_[q].lo, cs->bounds_second.lo);
        bounds_[q].hi = std::max(bounds_[q].hi, cs->bounds_second.hi);
      }
      sections_[p * n + q] = *cs;
    }
    CrossSection follow;
    follow.kind = SectionKind::SamePathBand;
    follow.first = follow.second = p;
    follow.diameter = diameter;
    follow.length = diameter;
    sections_[p * n + p] = follow;
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (!std::isfinite(bounds_[p].lo))
      throw Error(ErrorCode::Config, "path " + std::to_string(paths_[p].id) + " crosses no other path");
    paths_[p].entry_pos = bounds_[p].lo - entry_offset * diameter;
    paths_[p].exit_pos = bounds_[p].hi + exit_offset * diameter;
  }
}

PairSection Layout::section(int p, int q) const {
  const auto n = paths_.size();
  const auto a = static_cast<std::size_t>(std::min(p, q));
  const auto b = static_cast<std::size_t>(std::max(p, q));
  if (b >= n || p < 0 || q < 0) return {};
  const auto& cell = sections_[a * n + b];
  if (!cell) return {};
  return {&*cell, p <= q};
}

Constraint Layout::constraint(int high, int low, std::size_t high_index) const {
  const PairSection ps = section(high, low);
  if (!ps) throw Error(ErrorCode::InvalidGraph, "priority between non-conflicting paths");
  return {high_index, ps.cs, ps.p_is_first};
}

const Agent* find_agent(std::span<const Agent> agents, int id) {
  auto it = std::lower_bound(agents.begin(), agents.end(), id, [](const Agent& a, int v) { return a.id < v; });
  return (it != agents.end() && it->id == id) ? &*it : nullptr;
}

Phase backpressure_phase(std::span<const int> queues, std::span<const int> phases, int threshold) {
  long q1 = 0, q2 = 0;
  for (std::size_t p = 0; p < queues.size() && p < phases.size(); ++p) {
    if (phases[p] == 1) q1 += queues[p];
    if (phases[p] == 2) q2 += queues[p];
  }
  if (q1 - q2 >= threshold) return Phase::P1;
  if (q2 - q1 > threshold) return Phase::P2;
  return Phase::All;
}

IntersectionController::IntersectionController(const Layout& layout, PolicyConfig policy)
    : layout_(layout), policy_(policy) {
  state_.queues.assign(layout.path_count(), 0);
}

void IntersectionController::tick(long slot, std::span<const int> queues, std::span<const WaitingRobot> waiting) {
  state_.queues.assign(queues.begin(), queues.end());
  if (policy_.backpressure && policy_.bp_period > 0 && slot % policy_.bp_period == 0) {
    std::vector<int> phases(layout_.path_count());
    for (std::size_t p = 0; p < phases.size(); ++p) phases[p] = layout_.phase(static_cast<int>(p));
    state_.phase = backpressure_phase(state_.queues, phases, policy_.bp_threshold);
  }
  if (!policy_.locking) return;
  if (state_.lock_robot) {
    const bool still_waiting = std::any_of(waiting.begin(), waiting.end(),
                                           [&](const WaitingRobot& w) { return w.id == *state_.lock_robot; });
    if (!still_waiting) {
      state_.lock_robot.reset();
      state_.lock_path.reset();
    }
  }
  if (state_.lock_robot) return;
  double best = policy_.lock_threshold;
  for (const WaitingRobot& w : waiting) {
    const double cost = policy_.lock_a * std::pow(static_cast<double>(w.wait), policy_.lock_b);
    if (cost > best || (cost == best && state_.lock_robot && cost > policy_.lock_threshold && w.id < *state_.lock_robot)) {
      best = cost;
      state_.lock_robot = w.id;
      state_.lock_path = w.path;
    }
  }
}

void IntersectionController::remove(int id) {
  auto& acc = state_.accepted;
  acc.erase(std::remove(acc.begin(), acc.end(), id), acc.end());
  state_.higher.erase(id);
  for (auto& [low, highs] : state_.higher) highs.erase(std::remove(highs.begin(), highs.end(), id), highs.end());
  pred_.valid = false;
}

ConstraintLists IntersectionController::constraints(std::span<const Agent> agents) const {
  ConstraintLists out(agents.size());
  std::vector<long> last_on_path(layout_.path_count(), -1);
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const Agent& a = agents[k];
    if (a.accepted) {
      auto it = state_.higher.find(a.id);
      if (it != state_.higher.end()) {
        for (int h : it->second) {
          auto hit = std::lower_bound(agents.begin(), agents.end(), h,
                                      [](const Agent& x, int v) { return x.id < v; });
          if (hit == agents.end() || hit->id != h) continue;
          const auto hk = static_cast<std::size_t>(hit - agents.begin());
          out[k].push_back(layout_.constraint(hit->path, a.path, hk));
        }
      }
    } else if (last_on_path[static_cast<std::size_t>(a.path)] >= 0) {
      const auto hk = static_cast<std::size_t>(last_on_path[static_cast<std::size_t>(a.path)]);
      out[k].push_back(layout_.constraint(a.path, a.path, hk));
    }
    last_on_path[static_cast<std::size_t>(a.path)] = static_cast<long>(k);
  }
  return out;
}

long IntersectionController::slots_to_reach(const State& s, const RobotLimits& limits, double target) {
  State x = s;
  for (long k = 0; k < 100000; ++k) {
    if (x.x >= target) return k;
    x = advance(x, limits.u_max, {}, limits);
  }
  return 100000;
}

std::vector<int> IntersectionController::conflicting_accepted(const Agent& req, std::span<const Agent> agents) const {
  std::vector<int> out;
  for (int id : state_.accepted) {
    const Agent* a = find_agent(agents, id);
    if (a && layout_.conflicts(a->path, req.path)) out.push_back(id);
  }
  return out;
}

RequestDecision IntersectionController::process(const Agent& req, std::span<const Agent> agents, long slot) {
  if (req.accepted) return {false, "already-accepted"};
  if (state_.phase != Phase::All) {
    const int ph = layout_.phase(req.path);
    const int active = state_.phase == Phase::P1 ? 1 : 2;
    if (ph != 0 && ph != active) return {false, "phase"};
  }
  if (state_.lock_robot && *state_.lock_robot != req.id && layout_.conflicts(req.path, *state_.lock_path))
    return {false, "lock"};

  RequestDecision d = policy_.kind == PolicyKind::Exact ? exact_check(req, agents, slot) : heuristic_check(req, agents);
  if (!d.accepted) return d;

  const std::vector<int> highs = conflicting_accepted(req, agents);
  if (!post_validate(req, agents, highs)) return {false, "brake-safety"};

  auto& acc = state_.accepted;
  acc.insert(std::upper_bound(acc.begin(), acc.end(), req.id), req.id);
  state_.higher[req.id] = highs;
  if (state_.lock_robot == req.id) {
    state_.lock_robot.reset();
    state_.lock_path.reset();
  }
  pred_.valid = false;
  return {true, "accepted"};
}

bool IntersectionController::post_validate(const Agent& req, std::span<const Agent> agents,
                                           const std::vector<int>& highs) const {
  std::vector<NDState> boxes{req.box};
  std::vector<RobotLimits> limits{req.limits};
  ConstraintLists c(1);
  for (int h : highs) {
    const Agent* a = find_agent(agents, h);
    boxes.push_back(a->box);
    limits.push_back(a->limits);
    c.emplace_back();
    c[0].push_back(layout_.constraint(a->path, req.path, boxes.size() - 1));
  }
  return nd_is_brake_safe(boxes, limits, c);
}

RequestDecision IntersectionController::heuristic_check(const Agent& req, std::span<const Agent> agents) {
  // Last accepted robot on each crossing path.
  std::map<int, const Agent*> last;
  for (int id : state_.accepted) {
    const Agent* a = find_agent(agents, id);
    if (a && a->path != req.path && layout_.conflicts(a->path, req.path)) last[a->path] = a;
  }
  const State mine = req.box.mean();
  for (const auto& [path, j] : last) {
    const PairSection ps = layout_.section(req.path, path);
    const Interval& on_i = ps.cs->bounds(ps.p_is_first);
    const Interval& on_j = ps.cs->bounds(!ps.p_is_first);
    const long tau_i = slots_to_reach(mine, req.limits, on_i.lo);
    const long tau_j = slots_to_reach(j->box.mean(), j->limits, on_j.hi);
    if (tau_i < tau_j) return {false, "tau"};
  }
  return {true, "tau"};
}

bool IntersectionController::prediction_matches(std::span<const Agent> agents, long slot) const {
  if (!pred_.valid || slot < pred_.base_slot) return false;
  const auto offset = static_cast<std::size_t>(slot - pred_.base_slot);
  if (offset >= pred_.steps.size()) return false;
  if (pred_.ids != state_.accepted) return false;
  for (std::size_t m = 0; m < pred_.ids.size(); ++m) {
    const Agent* a = find_agent(agents, pred_.ids[m]);
    const NDState& p = pred_.steps[offset][m];
    if (!a || !(a->box.lo == p.lo) || !(a->box.hi == p.hi)) return false;
  }
  return true;
}

void IntersectionController::rebuild_prediction(std::span<const Agent> agents, long slot) {
  Prediction p;
  p.base_slot = slot;
  p.ids = state_.accepted;
  std::vector<NDState> now;
  for (int id : p.ids) {
    const Agent* a = find_agent(agents, id);
    if (!a) throw Error(ErrorCode::Config, "accepted robot missing from agent list");
    p.paths.push_back(a->path);
    p.limits.push_back(a->limits);
    now.push_back(a->box);
  }
  p.constraints.resize(p.ids.size());
  for (std::size_t m = 0; m < p.ids.size(); ++m) {
    auto it = state_.higher.find(p.ids[m]);
    if (it == state_.higher.end()) continue;
    for (int h : it->second) {
      auto pos = std::lower_bound(p.ids.begin(), p.ids.end(), h);
      if (pos == p.ids.end() || *pos != h) continue;
      const auto hm = static_cast<std::size_t>(pos - p.ids.begin());
      p.constraints[m].push_back(layout_.constraint(p.paths[hm], p.paths[m], hm));
    }
  }
  p.steps.push_back(std::move(now));
  p.valid = true;
  pred_ = std::move(p);
}

const std::vector<NDState>& IntersectionController::predicted(std::size_t k) {
  while (pred_.steps.size() <= k) {
    const auto& cur = pred_.steps.back();
    const ControlDecision u = nd_law(cur, pred_.limits, pred_.constraints);
    std::vector<NDState> next(cur.size());
    for (std::size_t m = 0; m < cur.size(); ++m) next[m] = nd_propagate(cur[m], u[m], pred_.limits[m]);
    pred_.steps.push_back(std::move(next));
  }
  return pred_.steps[k];
}

const std::vector<double>& IntersectionController::predicted_brake(std::size_t k, std::size_t m) {
  predicted(k);
  if (pred_.brakes.size() <= k) pred_.brakes.resize(k + 1);
  auto& row = pred_.brakes[k];
  if (row.empty()) row.resize(pred_.ids.size());
  if (row[m].empty())
    worst_case_positions(pred_.steps[k][m].lo, pred_.limits[m], pred_.limits[m].d_lo, 0, row[m]);
  return row[m];
}

RequestDecision IntersectionController::exact_check(const Agent& req, std::span<const Agent> agents, long slot) {
  if (!prediction_matches(agents, slot)) rebuild_prediction(agents, slot);
  const auto offset = static_cast<std::size_t>(slot - pred_.base_slot);

  struct Conflict {
    std::size_t m;
    Constraint c;
    double clear_at;  // the high robot no longer constrains once past this
  };
  std::vector<Conflict> conflicts;
  for (std::size_t m = 0; m < pred_.ids.size(); ++m) {
    if (!layout_.conflicts(pred_.paths[m], req.path)) continue;
    const Constraint c = layout_.constraint(pred_.paths[m], req.path, m);
    conflicts.push_back({m, c, c.section->bounds(c.high_is_first).hi});
  }
  if (conflicts.empty()) return {true, "free"};

  State sigma = req.box.hi;
  std::vector<double> impulse;
  for (long k = 0; k < policy_.max_prediction; ++k) {
    const std::size_t step = offset + static_cast<std::size_t>(k);
    const auto& boxes = predicted(step);
    worst_case_positions(sigma, req.limits, req.limits.d_hi, 1, impulse);
    bool pending = false;
    for (const Conflict& cf : conflicts) {
      const NDState& bj = boxes[cf.m];
      if (bj.lo.x >= cf.clear_at) continue;
      if (std::isfinite(cf.clear_at)) pending = true;
      if (staggered_enters(*cf.c.section, cf.c.high_is_first, predicted_brake(step, cf.m), impulse, kLawGuard))
        return {false, "conflict"};
    }
    if (!pending) return {true, "clear"};
    sigma = advance(sigma, req.limits.u_max, req.limits.d_hi, req.limits);
  }
  return {false, "horizon"};
}

}  // namespace prio
