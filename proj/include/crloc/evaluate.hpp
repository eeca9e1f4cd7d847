#pragma once

#include "crloc/localize.hpp"
#include "crloc/neural.hpp"
#include "crloc/synthgen.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace crloc::eval {

/// A localizer packaged for the evaluation harness. Each method renders at
/// its own patch size (the CNN is bound to its input size; the algorithmic
/// methods default to 180).
struct MethodSpec {
  localize::Method id = localize::Method::threshold;
  int image_size = 180;
  std::function<std::optional<Vec2>(const ImagePatch&)> fn;
};

MethodSpec make_threshold_method(const localize::ThresholdParams& params, int image_size = 180);
MethodSpec make_radial_symmetry_method(int image_size = 180);
MethodSpec make_intensity_method(int image_size = 180);
MethodSpec make_oracle_method(int image_size = 180);
MethodSpec make_cnn_method(const neural::NetworkF* net);

/// One 100-step sub-pixel sweep: x_c = x0 + 0.01*k with x0 half a pixel
/// left of the patch center, so the steps straddle a pixel boundary.
struct SweepResult {
  synth::GridPoint point;
  localize::Method method = localize::Method::threshold;
  std::vector<double> errors;  // signed x errors; NaN marks a failed step
  int fail_count = 0;
  double mean_abs = 0.0;
  double max_abs = 0.0;
  double bias = 0.0;  // mean signed error
};

/// Recompute mean/max/bias/fail_count from the error series.
void summarize(SweepResult& r);

inline constexpr int kSweepSteps = 100;
inline constexpr double kSweepDelta = 0.01;

/// Noise seeds are fixed per (seed, step) so different methods see
/// identical noisy images.
SweepResult subpixel_sweep(const synth::GridPoint& point, const MethodSpec& method,
                           uint64_t seed);

/// Sweeps for every (point, method), in deterministic row order.
/// `jobs` <= 1 runs serially; parallel runs produce identical results.
std::vector<SweepResult> grid_eval(const std::vector<synth::GridPoint>& grid,
                                   const std::vector<MethodSpec>& methods, uint64_t seed,
                                   int jobs = 1);

/// Best-achievable benchmark: oracle center-of-mass sweeps over the r x A
/// evaluation grid with black background and zero noise.
std::vector<SweepResult> optimal_benchmark(uint64_t seed, int image_size = 180, int jobs = 1);

/// Frame-to-frame scatter of a localizer on repeated renders of one scene
/// differing only in the noise realization: RMS of sample-to-sample
/// Euclidean differences. The CR sits a quarter pixel off the patch center
/// (a generic sub-pixel position), rendered at each method's patch size.
struct PrecisionResult {
  double rms = 0.0;
  int fail_count = 0;
  int frames = 0;
};

PrecisionResult precision_sweep(const synth::GridPoint& point, const MethodSpec& method,
                                int n_frames, uint64_t seed);

}  // namespace crloc::eval
