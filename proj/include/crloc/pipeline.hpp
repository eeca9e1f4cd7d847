#pragma once

#include "crloc/localize.hpp"
#include "crloc/neural.hpp"

#include <optional>
#include <span>
#include <vector>

namespace crloc::pipeline {

enum class Refiner { none, radial_symmetry, cnn };

/// Analysis region in frame pixels; width/height 0 means the whole frame.
struct Roi {
  int x = 0, y = 0, w = 0, h = 0;
};

struct PipelineConfig {
  Roi roi;
  localize::ThresholdParams cr_blob{0.75, 3.0, 5000.0, 0.3};
  localize::ThresholdParams pupil_blob{0.25, 50.0, 100000.0, 0.3};
  int cutout_size = 180;      // equals the refiner's input size for the CNN
  double mask_radius = 48.0;  // halved when downsample = 2
  Refiner refiner = Refiner::none;
  const neural::NetworkF* model = nullptr;
  int downsample = 1;  // 1 or 2

  void validate() const;
};

struct CoarseResult {
  std::optional<Vec2> pupil;
  std::optional<Vec2> cr;
};

/// Bright-blob CR and dark-blob pupil centers inside the ROI, as binary
/// centroids after hole filling and shape/size filtering.
CoarseResult coarse_detect(const ImagePatch& frame, const PipelineConfig& cfg);

struct RefineResult {
  Vec2 center{0.0, 0.0};
  bool fallback = false;  // refiner failed; coarse center returned
};

/// Cutout around the coarse center, circular mask, then the configured
/// refiner; the estimate maps back to frame coordinates. The cutout is
/// anchored so the CR lands within half a pixel of the patch center.
RefineResult refine(const ImagePatch& frame, const Vec2& coarse_cr, const PipelineConfig& cfg);

/// 2x2 box average, requantized. Odd trailing row/column is cropped.
/// Coordinates relate by x_full = 2*x_half + 0.5.
ImagePatch downsample2(const ImagePatch& frame);

/// Zero-padded cutout of size `size` whose origin is chosen from the
/// coarse center; returns the origin via `origin_out`.
ImagePatch extract_cutout(const ImagePatch& frame, const Vec2& center, int size,
                          Eigen::Vector2i* origin_out);

struct FrameResult {
  int frame_index = 0;
  std::optional<Vec2> pupil;
  std::optional<Vec2> cr_threshold;  // coarse CR center
  std::optional<Vec2> cr_refined;    // refiner output (absent when refiner = none)
  bool refine_fallback = false;
};

/// Frame-wise processing, no temporal state. All reported coordinates are
/// in full-resolution frame pixels regardless of the downsample factor.
std::vector<FrameResult> process_sequence(std::span<const ImagePatch> frames,
                                          const PipelineConfig& cfg, int jobs = 1);

/// Threshold tuning helper: reprocesses a clip at each candidate CR
/// threshold and reports the RMS of sample-to-sample differences of the
/// coarse CR signal.
struct ThresholdScanRow {
  double threshold = 0.0;
  double rms_s2s = 0.0;
  int fail_count = 0;
};

std::vector<ThresholdScanRow> scan_cr_thresholds(std::span<const ImagePatch> frames,
                                                 const PipelineConfig& cfg,
                                                 std::span<const double> thresholds);

}  // namespace crloc::pipeline
