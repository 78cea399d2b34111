#include "prio/kernels.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#include "prio/error.hpp"

namespace prio {

namespace {

constexpr double kInfD = std::numeric_limits<double>::infinity();

// Operation order here is mirrored lane-for-lane by the AVX2 variant.
inline double ellipse_local(const ThresholdParams& p, double a) {
  double q = p.diameter_sq - (a * a) * p.sin_sq;
  q = (q > 0.0) ? q : 0.0;
  const double lower = a * p.cos_theta - std::sqrt(q);
  double h = (a <= p.stationary) ? -p.half_extent : lower;
  h = (a >= p.half_extent) ? kInfD : h;
  return h;
}

inline double band_local(const ThresholdParams& p, double a) {
  const double am = (a > p.in_lo) ? a : p.in_lo;
  const double bl = am - p.length;
  double h = (bl > p.out_lo) ? bl : p.out_lo;
  h = (am >= p.in_hi) ? kInfD : h;
  h = (bl >= p.out_hi) ? kInfD : h;
  return h;
}

std::atomic<int> g_forced{-1};

Isa detect() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

}  // namespace

double threshold_at(const ThresholdParams& p, double x) {
  const double a = (x - p.shift) - p.in_offset;
  const double h = (p.kind == ThresholdKind::Ellipse) ? ellipse_local(p, a) : band_local(p, a);
  return (p.out_offset + h) - p.shift;
}

namespace detail {

void threshold_batch_scalar(const ThresholdParams& p, const double* in, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = threshold_at(p, in[k]);
}

}  // namespace detail

bool isa_available(Isa isa) {
  if (isa == Isa::Scalar) return true;
  return detect() == Isa::Avx2;
}

Isa active_isa() {
  static const Isa detected = detect();
  const int forced = g_forced.load(std::memory_order_relaxed);
  return forced < 0 ? detected : static_cast<Isa>(forced);
}

void force_isa(Isa isa) {
  if (!isa_available(isa)) throw Error(ErrorCode::Config, "requested ISA not available on this CPU");
  g_forced.store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() { g_forced.store(-1, std::memory_order_relaxed); }

void threshold_batch(const ThresholdParams& p, const double* in, double* out, std::size_t n) {
  if (active_isa() == Isa::Avx2)
    detail::threshold_batch_avx2(p, in, out, n);
  else
    detail::threshold_batch_scalar(p, in, out, n);
}

}  // namespace prio
