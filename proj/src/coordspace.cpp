#include "prio/coordspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "prio/error.hpp"

namespace prio {

Vec2 PathGeometry::direction() const { return {std::cos(heading), std::sin(heading)}; }

Vec2 PathGeometry::point_at(double s) const {
  const Vec2 d = direction();
  return {origin.x + s * d.x, origin.y + s * d.y};
}

bool CrossSection::contains(double a, double b) const {
  if (kind == SectionKind::CrossingEllipse) {
    const double la = a - offset_first;
    const double lb = b - offset_second;
    return la * la + lb * lb - 2.0 * la * lb * cos_theta < diameter * diameter;
  }
  if (!window_first.contains(a) || !window_second.contains(b)) return false;
  return std::abs((a - offset_first) - (b - offset_second)) < length;
}

namespace {

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

void validate_path(const PathGeometry& p) {
  const std::string tag = "path " + std::to_string(p.id);
  if (!std::isfinite(p.heading) || !std::isfinite(p.origin.x) || !std::isfinite(p.origin.y))
    throw Error(ErrorCode::InvalidGeometry, tag + ": non-finite origin or heading");
  if (p.heading < 0.0 || p.heading >= 2.0 * std::numbers::pi)
    throw Error(ErrorCode::InvalidGeometry, tag + ": heading outside [0, 2pi)");
  if (!(p.entry_pos < p.exit_pos)) throw Error(ErrorCode::InvalidGeometry, tag + ": entry_pos must be < exit_pos");
}

Interval default_window(const PathGeometry& p, double diameter) {
  return {p.entry_pos - 2.0 * diameter, p.exit_pos + 2.0 * diameter};
}

}  // namespace

std::optional<CrossSection> build_cross_section(const PathGeometry& path_i, const PathGeometry& path_j,
                                                double diameter, RobotId i, RobotId j,
                                                const SectionOptions& options) {
  validate_path(path_i);
  validate_path(path_j);
  if (!(diameter > 0.0) || !std::isfinite(diameter))
    throw Error(ErrorCode::InvalidGeometry, "diameter must be positive");

  const Vec2 ui = path_i.direction();
  const Vec2 uj = path_j.direction();
  const Vec2 delta{path_j.origin.x - path_i.origin.x, path_j.origin.y - path_i.origin.y};
  const double det = cross(ui, uj);

  CrossSection cs;
  cs.first = i;
  cs.second = j;
  cs.diameter = diameter;

  if (std::abs(det) > 1e-12) {
    cs.kind = SectionKind::CrossingEllipse;
    cs.cos_theta = dot(ui, uj);
    cs.offset_first = cross(delta, uj) / det;
    cs.offset_second = cross(delta, ui) / det;
    const double half = diameter / std::sqrt(1.0 - cs.cos_theta * cs.cos_theta);
    cs.bounds_first = {cs.offset_first - half, cs.offset_first + half};
    cs.bounds_second = {cs.offset_second - half, cs.offset_second + half};
    return cs;
  }

  const double lateral = std::abs(cross(delta, ui));
  if (lateral >= diameter) return std::nullopt;
  if (dot(ui, uj) < 0.0)
    throw Error(ErrorCode::InvalidGeometry, "opposite-direction lanes closer than the diameter");

  const double full = options.band_length.value_or(diameter);
  cs.kind = SectionKind::SamePathBand;
  cs.length = std::sqrt(full * full - lateral * lateral);
  cs.offset_first = 0.0;
  cs.offset_second = -dot(delta, ui);
  cs.window_first = options.window_first.value_or(default_window(path_i, diameter));
  cs.window_second = options.window_second.value_or(default_window(path_j, diameter));
  if (!(cs.window_first.lo < cs.window_first.hi) || !(cs.window_second.lo < cs.window_second.hi))
    throw Error(ErrorCode::InvalidGeometry, "empty band window");

  // Projection of the band onto each axis, clipped to the windows.
  const double s = cs.offset_first - cs.offset_second;
  const Interval reach_first{cs.window_second.lo + s - cs.length, cs.window_second.hi + s + cs.length};
  const Interval reach_second{cs.window_first.lo - s - cs.length, cs.window_first.hi - s + cs.length};
  cs.bounds_first = {std::max(cs.window_first.lo, reach_first.lo), std::min(cs.window_first.hi, reach_first.hi)};
  cs.bounds_second = {std::max(cs.window_second.lo, reach_second.lo),
                      std::min(cs.window_second.hi, reach_second.hi)};
  if (!(cs.bounds_first.lo < cs.bounds_first.hi) || !(cs.bounds_second.lo < cs.bounds_second.hi))
    return std::nullopt;
  return cs;
}

ThresholdParams threshold_params(const CrossSection& cs, bool high_is_first, double inflation) {
  ThresholdParams p;
  p.shift = inflation;
  p.in_offset = high_is_first ? cs.offset_first : cs.offset_second;
  p.out_offset = high_is_first ? cs.offset_second : cs.offset_first;
  if (cs.kind == SectionKind::CrossingEllipse) {
    p.kind = ThresholdKind::Ellipse;
    const double c = cs.cos_theta;
    const double s2 = 1.0 - c * c;
    const double s = std::sqrt(s2);
    p.cos_theta = c;
    p.diameter_sq = cs.diameter * cs.diameter;
    p.sin_sq = s2;
    p.half_extent = cs.diameter / s;
    p.stationary = -c * cs.diameter / s;
  } else {
    p.kind = ThresholdKind::Band;
    p.length = cs.length;
    const Interval& win_in = high_is_first ? cs.window_first : cs.window_second;
    const Interval& win_out = high_is_first ? cs.window_second : cs.window_first;
    p.in_lo = win_in.lo - p.in_offset;
    p.in_hi = win_in.hi - p.in_offset;
    p.out_lo = win_out.lo - p.out_offset;
    p.out_hi = win_out.hi - p.out_offset;
  }
  return p;
}

double completion_threshold(const CrossSection& cs, bool high_is_first, double x_high, double inflation) {
  return threshold_at(threshold_params(cs, high_is_first, inflation), x_high);
}

bool in_completed(const CrossSection& cs, double x_first, double x_second, Precedence order, double inflation) {
  if (order == Precedence::FirstOverSecond)
    return x_second > completion_threshold(cs, true, x_first, inflation) + kMembershipEps;
  return x_first > completion_threshold(cs, false, x_second, inflation) + kMembershipEps;
}

SectionTable::SectionTable(std::size_t robots) : n_(robots), cells_(robots * robots) {}

std::size_t SectionTable::index(RobotId i, RobotId j) const {
  if (i >= n_ || j >= n_) throw Error(ErrorCode::InvalidGeometry, "robot id outside section table");
  return std::min(i, j) * n_ + std::max(i, j);
}

void SectionTable::set(const CrossSection& cs) {
  if (cs.first == cs.second) throw Error(ErrorCode::InvalidGeometry, "section needs two distinct robots");
  cells_[index(cs.first, cs.second)] = cs;
}

const CrossSection* SectionTable::find(RobotId i, RobotId j) const {
  if (i == j) return nullptr;
  const auto& cell = cells_[index(i, j)];
  return cell ? &*cell : nullptr;
}

std::vector<const CrossSection*> SectionTable::all() const {
  std::vector<const CrossSection*> out;
  for (const auto& c : cells_)
    if (c) out.push_back(&*c);
  return out;
}

SectionTable SectionTable::from_paths(const std::vector<PathGeometry>& paths, double diameter,
                                      const SectionOptions& options) {
  SectionTable table(paths.size());
  for (RobotId i = 0; i < paths.size(); ++i)
    for (RobotId j = i + 1; j < paths.size(); ++j)
      if (auto cs = build_cross_section(paths[i], paths[j], diameter, i, j, options)) table.set(*cs);
  return table;
}

std::vector<Interval> obstacle_bounds(const std::vector<const CrossSection*>& sections, std::size_t robots) {
  std::vector<Interval> out(robots, Interval{kInf, -kInf});
  std::vector<bool> touched(robots, false);
  auto merge = [&](RobotId r, const Interval& b) {
    if (r >= robots) return;
    out[r].lo = std::min(out[r].lo, b.lo);
    out[r].hi = std::max(out[r].hi, b.hi);
    touched[r] = true;
  };
  for (const CrossSection* cs : sections) {
    merge(cs->first, cs->bounds_first);
    merge(cs->second, cs->bounds_second);
  }
  for (std::size_t r = 0; r < robots; ++r)
    if (!touched[r]) out[r] = Interval{};
  return out;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGeometry: return "invalid-geometry";
    case ErrorCode::PathInfeasible: return "path-infeasible";
    case ErrorCode::UndeterminedPriority: return "undetermined-priority";
    case ErrorCode::InvalidCycle: return "invalid-cycle";
    case ErrorCode::CycleLimit: return "cycle-limit";
    case ErrorCode::InsufficientMargin: return "insufficient-margin";
    case ErrorCode::InvalidControl: return "invalid-control";
    case ErrorCode::InconsistentObservation: return "inconsistent-observation";
    case ErrorCode::UnsupportedPriorities: return "unsupported-priorities";
    case ErrorCode::PriorityViolated: return "priority-violated";
    case ErrorCode::InvalidGraph: return "invalid-graph";
    case ErrorCode::Config: return "config";
    case ErrorCode::InstanceTooLarge: return "instance-too-large";
  }
  return "unknown";
}

}  // namespace prio
