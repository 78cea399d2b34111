#include "prio/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <ostream>

#include "prio/error.hpp"

namespace prio {

void Digest::add(std::string_view bytes) {
  for (unsigned char c : bytes) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

bool slot_collides(const CrossSection& cs, bool high_is_first, double high0, double high1, double low0,
                   double low1) {
  const double h[2] = {high0, high1};
  const double l[2] = {low0, low1};
  return staggered_enters(cs, high_is_first, h, l, kCheckGuard);
}

namespace {

Layout make_layout(const Scenario& s) {
  validate_scenario(s);
  return Layout(s.paths, s.diameter, s.entry_offset, s.exit_offset, s.phases);
}

}  // namespace

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)),
      layout_(make_layout(scenario_)),
      controller_(layout_, scenario_.policy),
      rng_(scenario_.seed) {}

double Simulator::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

double Simulator::sigma_scale() const {
  const auto& n = scenario_.noise;
  return (slot_ >= n.window_start && slot_ < n.window_end) ? n.window_factor : 1.0;
}

std::vector<Agent> Simulator::agents() const {
  std::vector<Agent> out;
  out.reserve(robots_.size());
  for (const Robot& r : robots_) out.push_back({r.id, r.path, r.box, r.limits, r.accepted});
  return out;
}

std::vector<int> Simulator::queues() const {
  std::vector<int> q(layout_.path_count(), 0);
  for (const Robot& r : robots_)
    if (!r.accepted) ++q[static_cast<std::size_t>(r.path)];
  return q;
}

void Simulator::arrivals() {
  if (slot_ >= scenario_.slots) return;
  const bool noisy = scenario_.noise.enabled;
  const auto& n = scenario_.noise;
  for (std::size_t p = 0; p < layout_.path_count(); ++p) {
    if (!(uniform() < scenario_.arrival_rate[p])) continue;
    Robot r;
    r.id = next_id_++;
    r.path = static_cast<int>(p);
    r.limits = scenario_.limits;
    r.spawn_slot = slot_;
    if (noisy) {
      r.limits.d_lo.dv = -uniform(0.0, 2.0 * n.dv_mean);
      r.limits.d_hi.dv = uniform(0.0, 2.0 * n.dv_mean);
      r.limits.d_lo.du = -uniform(0.0, 2.0 * n.du_mean);
      r.limits.d_hi.du = uniform(0.0, 2.0 * n.du_mean);
      r.limits.sigma_x = uniform(0.0, 2.0 * n.sigma_x_mean);
      r.limits.sigma_v = uniform(0.0, 2.0 * n.sigma_v_mean);
    }
    const double sx = r.limits.sigma_x * sigma_scale();
    double x = 0.0;
    for (auto it = robots_.rbegin(); it != robots_.rend(); ++it) {
      if (it->path != r.path) continue;
      x = std::min(0.0, it->box.lo.x - scenario_.diameter - sx);
      break;
    }
    r.truth = {x, 0.0};
    r.box = {{x - sx, 0.0}, {x + sx, 0.0}};
    robots_.push_back(r);
    ++metrics_.spawned;
  }
}

void Simulator::regimes() {
  if (scenario_.p_brake <= 0.0 && scenario_.q_release <= 0.0) return;
  for (Robot& r : robots_) {
    const double draw = uniform();
    if (r.regime == Regime::Normal && draw < scenario_.p_brake) r.regime = Regime::Brake;
    else if (r.regime == Regime::Brake && draw < scenario_.q_release) r.regime = Regime::Normal;
  }
}

void Simulator::requests(long& accepts, long& rejects) {
  std::vector<WaitingRobot> waiting;
  for (const Robot& r : robots_)
    if (!r.accepted && r.first_request) waiting.push_back({r.id, r.path, slot_ - *r.first_request});
  controller_.tick(slot_, queues(), waiting);

  std::vector<Agent> live = agents();
  std::vector<int> leader_accepted(layout_.path_count(), -1);  // -1 none, 0 no, 1 yes
  for (std::size_t k = 0; k < robots_.size(); ++k) {
    Robot& r = robots_[k];
    const auto p = static_cast<std::size_t>(r.path);
    const int leader = leader_accepted[p];
    leader_accepted[p] = r.accepted ? 1 : 0;
    if (r.accepted || leader == 0) continue;
    const double entry = layout_.path(r.path).entry_pos;
    if (!(stop_position(r.limits, r.box.hi, r.limits.d_hi) > entry - scenario_.policy.delta)) continue;
    if (!r.first_request) r.first_request = slot_;
    const RequestDecision d = controller_.process(live[k], live, slot_);
    if (d.accepted) {
      r.accepted = live[k].accepted = true;
      leader_accepted[p] = 1;
      ++accepts;
      ++metrics_.accepted;
    } else {
      ++rejects;
    }
  }
}

void Simulator::commands(const std::vector<Agent>& live) {
  const ConstraintLists c = controller_.constraints(live);
  std::vector<NDState> boxes;
  std::vector<RobotLimits> limits;
  for (const Robot& r : robots_) {
    boxes.push_back(r.box);
    limits.push_back(r.limits);
  }
  const ControlDecision u = nd_law(boxes, limits, c);
  for (std::size_t k = 0; k < robots_.size(); ++k) {
    Robot& r = robots_[k];
    const PathGeometry& path = layout_.path(r.path);
    r.command = u[k];
    if (!r.accepted && stop_position(r.limits, r.box.hi, r.limits.d_hi) > path.entry_pos) r.command = r.limits.u_min;
    if (r.regime == Regime::Brake) {
      if (r.command != r.limits.u_min) ++metrics_.brake_overrides;
      r.command = r.limits.u_min;
    }
    if (r.accepted && r.truth.x >= path.entry_pos && r.truth.x <= path.exit_pos) {
      ++metrics_.control_slots;
      if (r.command == r.limits.u_max) ++metrics_.throttle_slots;
    }
  }
}

void Simulator::advance_all() {
  const bool noisy = scenario_.noise.enabled;
  const double scale = sigma_scale();
  for (Robot& r : robots_) {
    Disturbance d;
    if (noisy) d = {uniform(r.limits.d_lo.dv, r.limits.d_hi.dv), uniform(r.limits.d_lo.du, r.limits.d_hi.du)};
    r.truth = advance(r.truth, r.command, d, r.limits);
    if (!noisy) {
      r.box = NDState::point(r.truth);
      continue;
    }
    const double sx = r.limits.sigma_x * scale, sv = r.limits.sigma_v;
    const double yx = r.truth.x + uniform(-sx, sx);
    const double yv = r.truth.v + uniform(-sv, sv);
    const NDState obs{{yx - sx, yv - sv}, {yx + sx, yv + sv}};
    r.box = nd_propagate(r.box, r.command, r.limits, obs);
    constexpr double tol = 1e-9;
    if (r.truth.x < r.box.lo.x - tol || r.truth.x > r.box.hi.x + tol || r.truth.v < r.box.lo.v - tol ||
        r.truth.v > r.box.hi.v + tol) {
      ++metrics_.box_escapes;
      breach("robot " + std::to_string(r.id) + " left its information state");
    }
  }
}

void Simulator::check(const std::vector<Robot>& before) {
  const ControllerState& cs = controller_.state();
  auto edge = [&](int high, int low) {
    auto it = cs.higher.find(low);
    return it != cs.higher.end() && std::find(it->second.begin(), it->second.end(), high) != it->second.end();
  };
  // Same-path pairs are checked between consecutive robots only.
  std::vector<std::size_t> next_same(robots_.size(), robots_.size());
  std::vector<std::size_t> last(layout_.path_count(), robots_.size());
  for (std::size_t k = robots_.size(); k-- > 0;) {
    next_same[k] = last[static_cast<std::size_t>(robots_[k].path)];
    last[static_cast<std::size_t>(robots_[k].path)] = k;
  }
  for (std::size_t a = 0; a < robots_.size(); ++a) {
    const Robot& ra = robots_[a];
    for (std::size_t b = a + 1; b < robots_.size(); ++b) {
      const Robot& rb = robots_[b];
      if (ra.path == rb.path ? b != next_same[a] : !layout_.conflicts(ra.path, rb.path)) continue;
      // Effective priority: assigned edge, accepted over waiting, leader over follower.
      bool a_high;
      bool assigned = false;
      if (ra.accepted && rb.accepted) {
        if (edge(ra.id, rb.id)) a_high = true, assigned = true;
        else if (edge(rb.id, ra.id)) a_high = false, assigned = true;
        else continue;
      } else if (ra.accepted != rb.accepted) {
        a_high = ra.accepted;
      } else {
        a_high = true;
      }
      const Robot& hi = a_high ? ra : rb;
      const Robot& lo = a_high ? rb : ra;
      const Robot& hi0 = a_high ? before[a] : before[b];
      const Robot& lo0 = a_high ? before[b] : before[a];
      const PairSection ps = layout_.section(hi.path, lo.path);
      // Thresholds never fall below the low robot's lower obstacle bound.
      if (std::max(lo.truth.x, lo.box.hi.x) <= ps.cs->bounds(!ps.p_is_first).lo) continue;
      const std::string pair = std::to_string(hi.id) + " over " + std::to_string(lo.id);
      if (slot_collides(*ps.cs, ps.p_is_first, hi0.truth.x, hi.truth.x, lo0.truth.x, lo.truth.x)) {
        ++metrics_.collisions;
        breach("collision " + pair);
      }
      if (scenario_.noise.enabled &&
          slot_collides(*ps.cs, ps.p_is_first, hi0.box.lo.x, hi.box.lo.x, lo0.box.hi.x, lo.box.hi.x)) {
        ++metrics_.box_collisions;
        breach("box collision " + pair);
      }
      if (assigned) {
        const double thr = completion_threshold(*ps.cs, ps.p_is_first, hi.box.lo.x);
        if (lo.box.hi.x > thr + kMembershipEps) {
          ++metrics_.violations;
          breach("priority violation " + pair);
        }
      }
    }
  }
}

void Simulator::exits() {
  auto gone = [&](const Robot& r) { return r.box.lo.x > layout_.path(r.path).exit_pos; };
  for (const Robot& r : robots_) {
    if (!gone(r)) continue;
    controller_.remove(r.id);
    metrics_.time_in_system.push_back(slot_ + 1 - r.spawn_slot);
    metrics_.exit_slots.push_back(slot_ + 1);
    ++metrics_.exited;
  }
  robots_.erase(std::remove_if(robots_.begin(), robots_.end(), gone), robots_.end());
}

void Simulator::emit(const std::string& row) {
  digest_.add(row);
  digest_.add("\n");
  if (trace_) *trace_ << row << '\n';
  tail_.push_back(row);
  if (tail_.size() > 32) tail_.pop_front();
}

void Simulator::breach(const std::string& what) {
  if (metrics_.diagnostic.empty()) metrics_.diagnostic = "slot " + std::to_string(slot_) + ": " + what;
  if (halt_) metrics_.halted = true;
}

void Simulator::record(long accepts, long rejects) {
  const std::string s = std::to_string(slot_);
  for (const Robot& r : robots_) {
    std::string row = s;
    row += ",robot,";
    row += std::to_string(r.id) + "," + std::to_string(r.path) + ",";
    row += format_double(r.truth.x) + "," + format_double(r.truth.v) + ",";
    row += r.regime == Regime::Brake ? "brake," : "normal,";
    row += r.accepted ? "1," : "0,";
    row += format_double(r.command) + ",";
    row += format_double(r.box.lo.x) + "," + format_double(r.box.hi.x) + ",";
    row += format_double(r.box.lo.v) + "," + format_double(r.box.hi.v) + ",,,,";
    emit(row);
  }
  const ControllerState& cs = controller_.state();
  std::string q;
  for (std::size_t p = 0; p < cs.queues.size(); ++p) q += (p ? ";" : "") + std::to_string(cs.queues[p]);
  emit(s + ",controller,,,,,,,,,,,," + to_string(cs.phase) + "," + q + "," + std::to_string(accepts) + "," +
       std::to_string(rejects));
}

bool Simulator::step() {
  if (metrics_.halted) return false;
  if (slot_ >= scenario_.slots && (robots_.empty() || slot_ >= scenario_.slots + scenario_.drain)) return false;

  arrivals();
  regimes();
  long accepts = 0, rejects = 0;
  requests(accepts, rejects);
  metrics_.accept_events += accepts;
  metrics_.reject_events += rejects;
  commands(agents());
  record(accepts, rejects);

  const std::vector<Robot> before = robots_;
  advance_all();
  check(before);
  exits();

  int q = 0;
  double age = 0.0;
  for (const Robot& r : robots_) {
    if (!r.accepted) ++q;
    age += static_cast<double>(slot_ + 1 - r.spawn_slot);
  }
  metrics_.queue.push_back(q);
  metrics_.avg_time_in_system.push_back(robots_.empty() ? 0.0 : age / static_cast<double>(robots_.size()));
  ++slot_;
  metrics_.slots_run = slot_;
  metrics_.remaining = static_cast<long>(robots_.size());
  metrics_.accepted_remaining = std::count_if(robots_.begin(), robots_.end(), [](const Robot& r) { return r.accepted; });
  metrics_.digest = digest_.value();
  return true;
}

RunMetrics Simulator::run() {
  if (trace_) *trace_ << kTraceHeader << '\n';
  while (step()) {
  }
  if (metrics_.halted && !tail_.empty()) {
    metrics_.diagnostic += "\nlast trace rows:";
    for (const auto& row : tail_) metrics_.diagnostic += "\n" + row;
  }
  metrics_.digest = digest_.value();
  return metrics_;
}

RunMetrics run_scenario(const Scenario& scenario, std::ostream* trace) {
  Simulator sim(scenario);
  sim.set_trace(trace);
  return sim.run();
}

void write_metrics(std::ostream& out, const RunMetrics& m) {
  out << "slot,queue,avg_time_in_system\n";
  for (std::size_t k = 0; k < m.queue.size(); ++k)
    out << k << ',' << m.queue[k] << ',' << format_double(m.avg_time_in_system[k]) << '\n';
  double mean_tis = 0.0;
  for (long t : m.time_in_system) mean_tis += static_cast<double>(t);
  if (!m.time_in_system.empty()) mean_tis /= static_cast<double>(m.time_in_system.size());
  out << "\n# summary\n";
  out << "slots," << m.slots_run << '\n';
  out << "spawned," << m.spawned << '\n';
  out << "accepted," << m.accepted << '\n';
  out << "exited," << m.exited << '\n';
  out << "remaining," << m.remaining << '\n';
  out << "accept_events," << m.accept_events << '\n';
  out << "reject_events," << m.reject_events << '\n';
  out << "collisions," << m.collisions << '\n';
  out << "violations," << m.violations << '\n';
  out << "box_collisions," << m.box_collisions << '\n';
  out << "box_escapes," << m.box_escapes << '\n';
  out << "brake_overrides," << m.brake_overrides << '\n';
  out << "throttle_fraction," << format_double(m.throttle_fraction()) << '\n';
  out << "mean_time_in_system," << format_double(mean_tis) << '\n';
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(m.digest));
  out << "digest," << hex << '\n';
}

}  // namespace prio
