#pragma once

#include <cstddef>
#include <cstdint>

// Batched evaluation of completion thresholds. Scalar reference plus an AVX2
// variant picked at runtime; both produce bit-identical results.

namespace prio {

enum class ThresholdKind : std::uint8_t { Ellipse, Band };

// Threshold of a completed region in the direction high ≻ low, as a function of
// the high-priority coordinate. Inputs and outputs are global curvilinear
// coordinates; `shift` is the infinity-norm inflation radius (negative erodes).
struct ThresholdParams {
  ThresholdKind kind = ThresholdKind::Ellipse;
  double in_offset = 0.0;
  double out_offset = 0.0;
  double shift = 0.0;

  // ellipse, local coordinates centred on the crossing point
  double cos_theta = 0.0;
  double diameter_sq = 0.0;
  double sin_sq = 1.0;
  double half_extent = 0.0;  // D / sin(theta)
  double stationary = 0.0;   // minimiser of the lower branch

  // band, local coordinates
  double length = 0.0;
  double in_lo = 0.0, in_hi = 0.0;
  double out_lo = 0.0, out_hi = 0.0;
};

double threshold_at(const ThresholdParams& p, double x);

void threshold_batch(const ThresholdParams& p, const double* in, double* out, std::size_t n);

enum class Isa { Scalar, Avx2 };

bool isa_available(Isa isa);
Isa active_isa();
// Tests use this to pin a variant; throws if the ISA is unavailable.
void force_isa(Isa isa);
void reset_isa();

namespace detail {
void threshold_batch_scalar(const ThresholdParams& p, const double* in, double* out, std::size_t n);
void threshold_batch_avx2(const ThresholdParams& p, const double* in, double* out, std::size_t n);
}  // namespace detail

}  // namespace prio
