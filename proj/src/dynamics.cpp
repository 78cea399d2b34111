#include "prio/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prio/error.hpp"

namespace prio {

void RobotLimits::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::Config, "robot limits: " + why); };
  if (!(v_max > 0.0) || !std::isfinite(v_max)) fail("v_max must be positive");
  if (!(u_max > 0.0) || !std::isfinite(u_max)) fail("u_max must be positive");
  if (!(u_min < 0.0) || !std::isfinite(u_min)) fail("u_min must be negative");
  if (d_lo.dv > 0.0 || d_lo.du > 0.0) fail("lower disturbance bounds must be <= 0");
  if (d_hi.dv < 0.0 || d_hi.du < 0.0) fail("upper disturbance bounds must be >= 0");
  if (!(d_lo.dv + v_max > 0.0)) fail("requires d_lo.dv + v_max > 0");
  if (!(u_max + d_lo.du > 0.0)) fail("requires u_max + d_lo.du > 0");
  if (!(u_min + d_hi.du < 0.0)) fail("requires u_min + d_hi.du < 0");
  if (sigma_x < 0.0 || sigma_v < 0.0) fail("observation precision must be >= 0");
}

double flow_velocity(double x0, std::span<const double> velocities, double t) {
  double x = x0;
  double remaining = t;
  for (double v : velocities) {
    if (remaining <= 0.0) break;
    const double dt = std::min(1.0, remaining);
    x += v * dt;
    remaining -= dt;
  }
  return x;
}

State advance(const State& s, double u, const Disturbance& d, const RobotLimits& limits, double tau) {
  if (!(u >= limits.u_min && u <= limits.u_max))
    throw Error(ErrorCode::InvalidControl, "control " + std::to_string(u) + " outside [u_min, u_max]");
  if (d.dv < limits.d_lo.dv || d.dv > limits.d_hi.dv || d.du < limits.d_lo.du || d.du > limits.d_hi.du)
    throw Error(ErrorCode::InvalidControl, "disturbance outside its bounds");

  const double vmax = limits.v_max;
  const double snap = 1e-12 * vmax;
  const double a = u + d.du;
  const double x = s.x;
  const double v = s.v;

  if (a > 0.0) {
    if (v >= vmax) return {x + (vmax + d.dv) * tau, vmax};
    const double tstar = (vmax - v) / a;
    if (tau < tstar) {
      double v1 = v + a * tau;
      if (vmax - v1 <= snap) v1 = vmax;
      return {x + v * tau + 0.5 * a * tau * tau, v1};
    }
    return {x + v * tstar + 0.5 * a * tstar * tstar + (vmax + d.dv) * (tau - tstar), vmax};
  }
  if (a < 0.0) {
    if (v <= 0.0) return {x, 0.0};
    const double tstar = v / -a;
    if (tau < tstar) {
      double v1 = v + a * tau;
      if (v1 <= snap) v1 = 0.0;
      return {x + v * tau + 0.5 * a * tau * tau, v1};
    }
    return {x + 0.5 * v * tstar, 0.0};
  }
  return {x + (v >= vmax ? vmax + d.dv : v) * tau, v};
}

State flow_second_order(const State& s0, std::span<const double> u, std::span<const Disturbance> d, double t,
                        const RobotLimits& limits) {
  if (u.empty()) throw Error(ErrorCode::InvalidControl, "empty control sequence");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidControl, "negative time");
  State s = s0;
  const auto whole = static_cast<std::size_t>(std::floor(t));
  auto control = [&](std::size_t k) { return u[std::min(k, u.size() - 1)]; };
  auto noise = [&](std::size_t k) { return d.empty() ? Disturbance{} : d[std::min(k, d.size() - 1)]; };
  for (std::size_t k = 0; k < whole; ++k) s = advance(s, control(k), noise(k), limits);
  const double frac = t - static_cast<double>(whole);
  if (frac > 0.0) s = advance(s, control(whole), noise(whole), limits, frac);
  return s;
}

std::size_t stop_horizon(const RobotLimits& limits) {
  return static_cast<std::size_t>(std::ceil(limits.v_max / -limits.u_min)) + 1;
}

void worst_case_positions(const State& s0, const RobotLimits& limits, const Disturbance& d, int throttle_slots,
                          std::vector<double>& out) {
  out.clear();
  out.push_back(s0.x);
  State s = s0;
  for (std::size_t k = 0; k < kMaxStopSlots; ++k) {
    const bool throttle = static_cast<int>(k) < throttle_slots;
    if (!throttle && s.v <= 0.0) return;
    s = advance(s, throttle ? limits.u_max : limits.u_min, d, limits);
    out.push_back(s.x);
  }
  throw Error(ErrorCode::InvalidControl, "brake flow did not stop");
}

ImpulseExtent impulse_extent(const RobotLimits& limits, const State& s, const Disturbance& d) {
  std::vector<double> xs;
  worst_case_positions(s, limits, d, 1, xs);
  return {xs.back() - s.x, xs.size() - 1};
}

namespace {

// Integral of min(v0 + a t, c) over [0, T].
double capped_distance(double v0, double a, double T, double c) {
  auto lin = [](double v, double acc, double t) { return v * t + 0.5 * acc * t * t; };
  if (T <= 0.0) return 0.0;
  if (a == 0.0) return std::min(v0, c) * T;
  if (a > 0.0) {
    if (v0 >= c) return c * T;
    const double tc = (c - v0) / a;
    return tc >= T ? lin(v0, a, T) : lin(v0, a, tc) + c * (T - tc);
  }
  if (v0 <= c) return lin(v0, a, T);
  const double tc = (c - v0) / a;
  return tc >= T ? c * T : c * tc + lin(c, a, T - tc);
}

}  // namespace

State advance_lower(const State& s, double u, const Disturbance& d, const RobotLimits& limits) {
  State next = advance(s, u, d, limits);
  if (d.dv >= 0.0) return next;
  const double c = limits.v_max + d.dv;
  const double a = u + d.du;
  const double v = s.v;
  double dist = 0.0;
  if (a > 0.0) {
    const double tstar = v >= limits.v_max ? 0.0 : (limits.v_max - v) / a;
    dist = capped_distance(v, a, std::min(1.0, tstar), c) + c * std::max(0.0, 1.0 - tstar);
  } else if (a < 0.0) {
    const double tstar = v <= 0.0 ? 0.0 : v / -a;
    dist = capped_distance(v, a, std::min(1.0, tstar), c);
  } else {
    dist = std::min(v, c);
  }
  next.x = s.x + dist;
  return next;
}

NDState nd_propagate(const NDState& box, double u, const RobotLimits& limits,
                     const std::optional<NDState>& observation) {
  if (box.lo.x > box.hi.x || box.lo.v > box.hi.v)
    throw Error(ErrorCode::InconsistentObservation, "empty information state");
  NDState next{advance_lower(box.lo, u, limits.d_lo, limits), advance(box.hi, u, limits.d_hi, limits)};
  if (!observation) return next;

  constexpr double tol = 1e-9;
  auto meet = [&](double& lo, double& hi, double olo, double ohi, const char* what) {
    double nlo = std::max(lo, olo);
    double nhi = std::min(hi, ohi);
    if (nlo > nhi + tol)
      throw Error(ErrorCode::InconsistentObservation, std::string(what) + " observation disjoint from prediction");
    if (nlo > nhi) nlo = nhi = 0.5 * (nlo + nhi);
    lo = nlo;
    hi = nhi;
  };
  meet(next.lo.x, next.hi.x, observation->lo.x, observation->hi.x, "position");
  meet(next.lo.v, next.hi.v, observation->lo.v, observation->hi.v, "velocity");
  return next;
}

}  // namespace prio
