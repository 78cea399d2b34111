#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "prio/intersection.hpp"
#include "prio/scenario.hpp"

namespace prio {

enum class Regime { Normal, Brake };

struct Robot {
  int id = 0;
  int path = 0;
  State truth;
  NDState box;
  RobotLimits limits;
  Regime regime = Regime::Normal;
  bool accepted = false;
  long spawn_slot = 0;
  std::optional<long> first_request;
  double command = 0.0;
};

struct RunMetrics {
  std::vector<int> queue;                  // total Q(t) after each slot
  std::vector<double> avg_time_in_system;  // mean age of live robots after each slot
  std::vector<long> time_in_system;        // per exited robot
  std::vector<long> exit_slots;
  long slots_run = 0;
  long spawned = 0;
  long accepted = 0;
  long accept_events = 0;
  long reject_events = 0;
  long exited = 0;
  long remaining = 0;
  long accepted_remaining = 0;
  long collisions = 0;      // conservative check on true states
  long violations = 0;      // assigned completions entered (box level)
  long box_collisions = 0;  // conservative check on box corners
  long box_escapes = 0;     // true state outside its box
  long control_slots = 0;   // accepted robots between entry and exit
  long throttle_slots = 0;  // ... of which commanded u_max
  long brake_overrides = 0;
  std::uint64_t digest = 0;
  bool halted = false;
  std::string diagnostic;

  double throttle_fraction() const {
    return control_slots == 0 ? 1.0 : static_cast<double>(throttle_slots) / static_cast<double>(control_slots);
  }
  bool safe() const { return collisions == 0 && violations == 0 && box_collisions == 0 && box_escapes == 0; }
};

inline constexpr const char* kTraceHeader =
    "slot,kind,robot,path,x,v,regime,accepted,command,x_lo,x_hi,v_lo,v_hi,phase,queues,accepts,rejects";

// FNV-1a, 64 bit.
class Digest {
 public:
  void add(std::string_view bytes);
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string format_double(double v);

// Conservative check of one slot for a pair: the staggered sequence
// (x_high(k), x_low(k+1)) over k in {0, 1} against the completion high ≻ low.
bool slot_collides(const CrossSection& cs, bool high_is_first, double high0, double high1, double low0,
                   double low1);

class Simulator {
 public:
  explicit Simulator(Scenario scenario);

  // One slot; false once the run is over.
  bool step();
  RunMetrics run();

  void set_trace(std::ostream* out) { trace_ = out; }
  // Stop at the first collision or violation (default on).
  void set_halt_on_breach(bool halt) { halt_ = halt; }

  const Scenario& scenario() const { return scenario_; }
  const Layout& layout() const { return layout_; }
  const IntersectionController& controller() const { return controller_; }
  const std::vector<Robot>& robots() const { return robots_; }
  const RunMetrics& metrics() const { return metrics_; }
  long slot() const { return slot_; }

 private:
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double sigma_scale() const;
  std::vector<Agent> agents() const;
  std::vector<int> queues() const;

  void arrivals();
  void regimes();
  void requests(long& accepts, long& rejects);
  void commands(const std::vector<Agent>& agents);
  void advance_all();
  void check(const std::vector<Robot>& before);
  void exits();
  void record(long accepts, long rejects);
  void emit(const std::string& row);
  void breach(const std::string& what);

  Scenario scenario_;
  Layout layout_;
  IntersectionController controller_;
  std::mt19937_64 rng_;
  std::vector<Robot> robots_;  // live, ascending id
  int next_id_ = 0;
  long slot_ = 0;
  RunMetrics metrics_;
  std::ostream* trace_ = nullptr;
  bool halt_ = true;
  Digest digest_;
  std::deque<std::string> tail_;
};

RunMetrics run_scenario(const Scenario& scenario, std::ostream* trace = nullptr);

// Per-slot series followed by a summary block.
void write_metrics(std::ostream& out, const RunMetrics& m);

}  // namespace prio
