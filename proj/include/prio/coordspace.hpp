#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "prio/kernels.hpp"

namespace prio {

using RobotId = std::size_t;
using Configuration = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kMembershipEps = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct PathGeometry {
  int id = 0;
  Vec2 origin;
  double heading = 0.0;
  double entry_pos = 0.0;
  double exit_pos = 0.0;

  Vec2 direction() const;
  Vec2 point_at(double s) const;
};

// Open interval.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double x) const { return lo < x && x < hi; }
};

enum class SectionKind { CrossingEllipse, SamePathBand };

enum class Precedence { FirstOverSecond, SecondOverFirst };

// Collision region between the `first` and `second` axes. For a crossing the
// region is {a^2 + b^2 - 2ab cos(theta) < D^2} with a, b measured from each
// path's crossing coordinate; for a band it is |a - b| < L inside the window.
struct CrossSection {
  SectionKind kind = SectionKind::CrossingEllipse;
  RobotId first = 0;
  RobotId second = 0;

  double diameter = 0.0;
  double cos_theta = 0.0;
  double offset_first = 0.0;
  double offset_second = 0.0;

  double length = 0.0;
  Interval window_first;
  Interval window_second;

  Interval bounds_first;
  Interval bounds_second;

  bool contains(double x_first, double x_second) const;
  const Interval& bounds(bool of_first) const { return of_first ? bounds_first : bounds_second; }
};

struct SectionOptions {
  std::optional<double> band_length;                 // defaults to the diameter
  std::optional<Interval> window_first, window_second;  // defaults to [entry - 2D, exit + 2D]
};

// Returns nullopt when the paths cannot bring two robots closer than D.
std::optional<CrossSection> build_cross_section(const PathGeometry& path_i, const PathGeometry& path_j,
                                                double diameter, RobotId i, RobotId j,
                                                const SectionOptions& options = {});

ThresholdParams threshold_params(const CrossSection& cs, bool high_is_first, double inflation = 0.0);

// Bound on the low-priority coordinate: the low robot is inside the completed
// region iff x_low > threshold(x_high).
double completion_threshold(const CrossSection& cs, bool high_is_first, double x_high,
                            double inflation = 0.0);

bool in_completed(const CrossSection& cs, double x_first, double x_second, Precedence order,
                  double inflation = 0.0);

// Dense pairwise lookup for a fixed robot set.
class SectionTable {
 public:
  explicit SectionTable(std::size_t robots = 0);

  std::size_t size() const { return n_; }
  void set(const CrossSection& cs);
  const CrossSection* find(RobotId i, RobotId j) const;
  std::vector<const CrossSection*> all() const;

  static SectionTable from_paths(const std::vector<PathGeometry>& paths, double diameter,
                                 const SectionOptions& options = {});

 private:
  std::size_t index(RobotId i, RobotId j) const;

  std::size_t n_;
  std::vector<std::optional<CrossSection>> cells_;
};

// Interval hull of every section bound touching each robot; (-inf, inf) when
// a robot has no section.
std::vector<Interval> obstacle_bounds(const std::vector<const CrossSection*>& sections, std::size_t robots);

}  // namespace prio
