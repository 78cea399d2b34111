#include "prio/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "prio/error.hpp"

namespace prio {

namespace {

constexpr double kPi = std::numbers::pi;

PathGeometry make_path(int id, double ox, double oy, double heading) {
  PathGeometry p;
  p.id = id;
  p.origin = {ox, oy};
  p.heading = heading;
  return p;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::Config, field + ": " + what);
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const std::string& field, T fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    fail(field + "." + key, "wrong type");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

YAML::Node load_yaml(const std::string& text) {
  try {
    YAML::Node root = YAML::Load(text);
    if (!root.IsMap()) fail("<root>", "expected a mapping");
    return root;
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Config, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

std::vector<PathGeometry> parse_paths(const YAML::Node& node, const std::string& field, std::vector<int>* phases) {
  if (!node.IsSequence()) fail(field, "expected a list of paths");
  std::vector<PathGeometry> out;
  for (std::size_t k = 0; k < node.size(); ++k) {
    const std::string f = field + "[" + std::to_string(k) + "]";
    const YAML::Node p = node[k];
    const auto origin = get<std::vector<double>>(p, "origin", f, {});
    if (origin.size() != 2) fail(f + ".origin", "expected [x, y]");
    PathGeometry g = make_path(get<int>(p, "id", f, static_cast<int>(k)), origin[0], origin[1],
                               get<double>(p, "heading", f, 0.0));
    if (!(g.heading >= 0.0 && g.heading < 2.0 * kPi)) fail(f + ".heading", "must lie in [0, 2pi)");
    g.entry_pos = get<double>(p, "entry", f, 0.0);
    g.exit_pos = get<double>(p, "exit", f, g.entry_pos + 100.0);
    if (phases) phases->push_back(get<int>(p, "phase", f, 0));
    out.push_back(g);
  }
  return out;
}

}  // namespace

std::vector<PathGeometry> eight_path_layout(double d, std::vector<int>* phases) {
  const double start = 14.0 * d, inner = 0.75 * d, outer = 2.25 * d;
  std::vector<PathGeometry> p{
      make_path(0, -start, -inner, 0.0),        make_path(1, -start, -outer, 0.0),
      make_path(2, start, inner, kPi),          make_path(3, start, outer, kPi),
      make_path(4, inner, -start, kPi / 2),     make_path(5, outer, -start, kPi / 2),
      make_path(6, -inner, start, 3 * kPi / 2), make_path(7, -outer, start, 3 * kPi / 2),
  };
  if (phases) *phases = {1, 1, 1, 1, 2, 2, 2, 2};
  return p;
}

std::vector<PathGeometry> four_path_layout(double d, std::vector<int>* phases) {
  const double start = 14.0 * d, lane = 0.75 * d;
  std::vector<PathGeometry> p{
      make_path(0, -start, -lane, 0.0),
      make_path(1, start, lane, kPi),
      make_path(2, lane, -start, kPi / 2),
      make_path(3, -lane, start, 3 * kPi / 2),
  };
  if (phases) *phases = {1, 1, 2, 2};
  return p;
}

void validate_scenario(const Scenario& s) {
  if (!(s.diameter > 0.0)) fail("diameter", "must be positive");
  if (s.paths.empty()) fail("paths", "no paths");
  if (s.arrival_rate.size() != s.paths.size()) fail("arrival_rate", "one rate per path required");
  for (std::size_t k = 0; k < s.arrival_rate.size(); ++k)
    if (!(s.arrival_rate[k] >= 0.0 && s.arrival_rate[k] <= 1.0))
      fail("arrival_rate[" + std::to_string(k) + "]", "must lie in [0, 1]");
  if (!(s.p_brake >= 0.0 && s.p_brake <= 1.0)) fail("regimes.p", "must lie in [0, 1]");
  if (!(s.q_release >= 0.0 && s.q_release <= 1.0)) fail("regimes.q", "must lie in [0, 1]");
  if (s.slots < 0) fail("slots", "must be non-negative");
  if (s.drain < 0) fail("drain", "must be non-negative");
  if (!(s.entry_offset > 0.0)) fail("entry_offset", "must be positive");
  if (!(s.exit_offset > 0.0)) fail("exit_offset", "must be positive");
  if (s.policy.bp_period <= 0) fail("policy.backpressure.period", "must be positive");
  if (s.policy.max_prediction <= 0) fail("policy.max_prediction", "must be positive");
  if (s.policy.delta < 0.0) fail("policy.delta", "must be non-negative");
  if (s.noise.window_factor < 1.0) fail("noise.window.factor", "must be >= 1");
  try {
    RobotLimits worst = s.limits;
    if (s.noise.enabled) {
      worst.d_lo = {-2.0 * s.noise.dv_mean, -2.0 * s.noise.du_mean};
      worst.d_hi = {2.0 * s.noise.dv_mean, 2.0 * s.noise.du_mean};
    }
    worst.validate();
  } catch (const Error& e) {
    fail("limits", e.what());
  }
}

Scenario parse_scenario(const std::string& text) {
  const YAML::Node root = load_yaml(text);
  Scenario s;
  try {
    s.diameter = get<double>(root, "diameter", "scenario", 1.0);
    s.layout = get<std::string>(root, "layout", "scenario", "eight-path");
    if (s.layout == "eight-path") {
      s.paths = eight_path_layout(s.diameter, &s.phases);
    } else if (s.layout == "four-path") {
      s.paths = four_path_layout(s.diameter, &s.phases);
    } else if (s.layout == "custom") {
      if (!root["paths"]) fail("paths", "required for a custom layout");
      s.paths = parse_paths(root["paths"], "paths", &s.phases);
    } else {
      fail("layout", "unknown layout '" + s.layout + "'");
    }
    s.entry_offset = get<double>(root, "entry_offset", "scenario", s.entry_offset);
    s.exit_offset = get<double>(root, "exit_offset", "scenario", s.exit_offset);

    if (const YAML::Node l = root["limits"]) {
      s.limits.v_max = get<double>(l, "v_max", "limits", s.limits.v_max);
      s.limits.u_max = get<double>(l, "u_max", "limits", s.limits.u_max);
      s.limits.u_min = get<double>(l, "u_min", "limits", s.limits.u_min);
    }

    const YAML::Node rate = root["arrival_rate"];
    if (!rate) {
      s.arrival_rate.assign(s.paths.size(), 0.0);
    } else if (rate.IsSequence()) {
      s.arrival_rate = get<std::vector<double>>(root, "arrival_rate", "scenario", {});
    } else {
      s.arrival_rate.assign(s.paths.size(), get<double>(root, "arrival_rate", "scenario", 0.0));
    }

    if (const YAML::Node p = root["policy"]) {
      const auto kind = get<std::string>(p, "kind", "policy", "exact");
      if (kind == "exact") s.policy.kind = PolicyKind::Exact;
      else if (kind == "heuristic") s.policy.kind = PolicyKind::Heuristic;
      else fail("policy.kind", "unknown policy '" + kind + "'");
      s.policy.delta = get<double>(p, "delta", "policy", 0.0);
      s.policy.max_prediction = get<long>(p, "max_prediction", "policy", s.policy.max_prediction);
      if (const YAML::Node lk = p["locking"]) {
        s.policy.locking = get<bool>(lk, "enabled", "policy.locking", false);
        s.policy.lock_a = get<double>(lk, "a", "policy.locking", s.policy.lock_a);
        s.policy.lock_b = get<double>(lk, "b", "policy.locking", s.policy.lock_b);
        s.policy.lock_threshold = get<double>(lk, "threshold", "policy.locking", s.policy.lock_threshold);
      }
      if (const YAML::Node bp = p["backpressure"]) {
        s.policy.backpressure = get<bool>(bp, "enabled", "policy.backpressure", false);
        s.policy.bp_period = get<long>(bp, "period", "policy.backpressure", s.policy.bp_period);
        s.policy.bp_threshold = get<int>(bp, "threshold", "policy.backpressure", s.policy.bp_threshold);
      }
    }

    if (const YAML::Node r = root["regimes"]) {
      s.p_brake = get<double>(r, "p", "regimes", 0.0);
      s.q_release = get<double>(r, "q", "regimes", 0.0);
    }

    if (const YAML::Node n = root["noise"]) {
      s.noise.enabled = get<bool>(n, "enabled", "noise", true);
      // Means are given relative to |u_min|, v_max and D.
      s.noise.dv_mean = get<double>(n, "dv", "noise", 0.0) * std::abs(s.limits.u_min);
      s.noise.du_mean = get<double>(n, "du", "noise", 0.0) * std::abs(s.limits.u_min);
      s.noise.sigma_v_mean = get<double>(n, "sigma_v", "noise", 0.0) * s.limits.v_max;
      s.noise.sigma_x_mean = get<double>(n, "sigma_x", "noise", 0.0) * s.diameter;
      if (const YAML::Node w = n["window"]) {
        s.noise.window_start = get<long>(w, "start", "noise.window", 0);
        s.noise.window_end = get<long>(w, "end", "noise.window", 0);
        s.noise.window_factor = get<double>(w, "factor", "noise.window", 1.0);
      }
    }

    s.seed = get<std::uint64_t>(root, "seed", "scenario", 1);
    s.slots = get<long>(root, "slots", "scenario", s.slots);
    s.drain = get<long>(root, "drain", "scenario", 0);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Config, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::string& path) { return parse_scenario(read_file(path)); }

Instance parse_instance(const std::string& text) {
  const YAML::Node root = load_yaml(text);
  Instance inst;
  try {
    inst.name = get<std::string>(root, "name", "instance", "");
    inst.diameter = get<double>(root, "diameter", "instance", 1.0);
    if (!root["paths"]) fail("paths", "required");
    inst.paths = parse_paths(root["paths"], "paths", nullptr);
    inst.start = get<std::vector<double>>(root, "start", "instance", {});
    inst.v_max = get<std::vector<double>>(root, "v_max", "instance", {});
    inst.horizon = get<int>(root, "horizon", "instance", inst.horizon);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Config, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  const std::size_t n = inst.paths.size();
  if (n == 0) fail("paths", "no paths");
  if (!inst.start.empty() && inst.start.size() != n) fail("start", "one position per path required");
  if (!inst.v_max.empty() && inst.v_max.size() != n) fail("v_max", "one speed per path required");
  if (inst.v_max.empty()) inst.v_max.assign(n, 0.5 * inst.diameter);
  if (inst.start.empty()) {
    const SectionTable sections = instance_sections(inst);
    const auto bounds = obstacle_bounds(sections.all(), n);
    for (std::size_t i = 0; i < n; ++i)
      inst.start.push_back(std::isfinite(bounds[i].lo) ? bounds[i].lo - inst.diameter : 0.0);
  }
  return inst;
}

Instance load_instance(const std::string& path) { return parse_instance(read_file(path)); }

SectionTable instance_sections(const Instance& inst) {
  SectionOptions open;
  open.window_first = Interval{};
  open.window_second = Interval{};
  return SectionTable::from_paths(inst.paths, inst.diameter, open);
}

}  // namespace prio
