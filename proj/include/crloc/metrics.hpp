#pragma once

#include "crloc/image.hpp"

#include <span>
#include <vector>

namespace crloc::metrics {

/// Time-stamped 2D position signal. Units are camera pixels for raw
/// pupil/CR signals and degrees for calibrated gaze.
struct GazeRecord {
  std::vector<double> t;  // seconds, strictly increasing
  std::vector<Vec2> s;
  double rate = 0.0;  // Hz, consistent with the timestamps within 1%

  void validate() const;
};

/// Second-order polynomial map per output axis:
/// p = a + b*x + c*y + d*x^2 + e*y^2 + f*x*y.
struct Calibration {
  Eigen::Matrix<double, 6, 1> coeff_x = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> coeff_y = Eigen::Matrix<double, 6, 1>::Zero();
  double residual_rms = 0.0;
};

struct FixationTarget {
  Vec2 position{0.0, 0.0};  // degrees on screen
  double onset = 0.0;
  double offset = 0.0;
};

/// Median RMS of sample-to-sample Euclidean differences over moving
/// windows of `window_s` seconds (stride one sample).
double rms_s2s(const GazeRecord& rec, double window_s = 0.2);

/// Median over the same windows of sqrt(var(x) + var(y)), population
/// variance.
double std_precision(const GazeRecord& rec, double window_s = 0.2);

/// Least-squares polynomial fit from point pairs (one P-CR vector per
/// target). Throws when fewer than 6 points or the design matrix is
/// rank-deficient.
Calibration fit_calibration(std::span<const Vec2> pcr, std::span<const Vec2> target_pos);

/// Median P-CR vector per fixation interval feeds the point-pair fit.
Calibration fit_calibration(const GazeRecord& pcr, std::span<const FixationTarget> targets);

Vec2 apply_calibration(const Calibration& cal, const Vec2& pcr);
std::vector<Vec2> apply_calibration(const Calibration& cal, std::span<const Vec2> pcr);

/// Mean over targets of the offset between per-interval median gaze and
/// the target position. Repeated positions are averaged before the mean.
struct AccuracyResult {
  double mean_offset = 0.0;  // degrees
  int excluded_targets = 0;  // intervals without samples
};

AccuracyResult accuracy(const GazeRecord& gaze, std::span<const FixationTarget> targets);

/// Component-wise median of a set of 2D samples.
Vec2 median2(std::span<const Vec2> samples);

}  // namespace crloc::metrics
