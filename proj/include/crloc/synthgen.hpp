#pragma once

#include "crloc/image.hpp"
#include "crloc/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace crloc::synth {

/// Saturated-Gaussian corneal reflection. `radius` is the radius of the
/// saturated disk; `amplitude` is the Gaussian peak in saturation units
/// (saturation level = 1), and must exceed 1 for the disk to exist.
struct CrSpec {
  Vec2 center{0.0, 0.0};
  double radius = 0.0;
  double amplitude = 0.0;
};

/// Two-luminance background split by a line with a raised-cosine edge.
/// The light side is the positive side of the line normal
/// n = (-sin(line_angle), cos(line_angle)).
struct BackgroundSpec {
  bool present = false;
  Vec2 line_point{0.0, 0.0};
  double line_angle = 0.0;       // radians in [0, 2*pi)
  double dark_intensity = 1.0;   // 8-bit levels, (0, light]
  double light_intensity = 0.0;  // 8-bit levels, <= 255
  double edge_width = 4.0;       // raised-cosine span in pixels
};

struct NoiseSpec {
  double sigma = 0.0;  // stddev in 8-bit levels
  uint64_t seed = 0;
};

/// Full parameterization of one synthetic image. `cr` is absent for
/// background-only rasters (used by edge-profile tests).
struct SceneSpec {
  std::optional<CrSpec> cr;
  BackgroundSpec background;
  NoiseSpec noise;
  int width = 0;
  int height = 0;
};

struct LabeledSample {
  ImagePatch image;
  Vec2 truth{0.0, 0.0};
  SceneSpec scene;
};

/// Sampling laws for one training stage. Ranges follow the broad
/// stage-1 regime; stage 2 replaces only the CR-center law with a
/// `stage2_center_span` box around the image's geometric center.
struct StageDistributions {
  int image_size = 180;
  double r_min = 1.0, r_max = 30.0;
  double a_min = 2.0, a_max = 20000.0;
  double sigma_n_min = 0.0, sigma_n_max = 30.0;
  double light_min = 32.0, light_max = 153.0;
  double dark_exp_scale = 10.0;  // exponential scale, 8-bit levels
  double dark_offset = 1.0;      // keeps full black out of the draw
  double line_point_sigma_r = 1.5;  // line-point stddev in units of r
  double edge_width = 4.0;
  double stage2_center_span = 1.5;  // pixels, centered on the image center

  static StageDistributions paper() { return {}; }

  /// Shrunk preset for desk-scale models: 64x64 patches, radii that
  /// still cover the evaluation range.
  static StageDistributions desk() {
    StageDistributions d;
    d.image_size = 64;
    d.r_max = 20.0;
    return d;
  }
};

/// sigma_w such that the Gaussian with peak `amplitude` equals exactly 1
/// (saturation) at distance `radius` from its center.
/// Throws std::domain_error when amplitude <= 1.
double sigma_from_radius(double radius, double amplitude);

/// Background-only raster in 8-bit units (no CR, no noise, no clamp).
RasterD render_background(const BackgroundSpec& bg, int width, int height);

/// Raster pipeline: CR field 255*G -> max with background -> additive
/// Gaussian noise -> clamp [0,255] -> 256-level quantization.
ImagePatch render_image(const SceneSpec& spec);

/// render_image plus ground truth; requires spec.cr.
LabeledSample render_scene(const SceneSpec& spec);

SceneSpec sample_stage1(const StageDistributions& dist, uint64_t seed);
SceneSpec sample_stage2(const StageDistributions& dist, uint64_t seed);

/// One cell of the evaluation grid. `E` is the gray-background location in
/// CR radii (nullopt = no gray background, i.e. fully black).
struct GridPoint {
  double r = 0.0;
  double A = 0.0;
  double sigma_n = 0.0;
  std::optional<double> E;
  double I = 0.0;  // light-section intensity, 8-bit levels
};

struct GridStride {
  int r = 1, A = 1, sigma_n = 1, E = 1, I = 1;
};

/// Cartesian evaluation grid: r {2,4,..,18} x A {10,50,200,1000,10000} x
/// sigma_n {0,2,..,18} x E {no gray, -1.5..1.5} x I {38..153}, optionally
/// strided per dimension. Full grid has 36000 points.
std::vector<GridPoint> build_eval_grid(const GridStride& stride = {});

/// Scene for one evaluation-grid cell at a given CR center. The dividing
/// line is vertical at horizontal offset E*r from the CR center, light
/// side on the left.
SceneSpec make_grid_scene(const GridPoint& p, int image_size, const Vec2& cr_center,
                          uint64_t noise_seed);

/// Synthetic full eye frame: bright sclera, mid-gray iris disk, dark pupil
/// disk, CR field composited with max, then the usual noise/quantize tail.
struct EyeFrameSpec {
  int width = 0, height = 0;
  double sclera_intensity = 200.0;
  Vec2 iris_center{0.0, 0.0};
  double iris_radius = 0.0;
  double iris_intensity = 100.0;
  Vec2 pupil_center{0.0, 0.0};
  double pupil_radius = 0.0;
  double pupil_intensity = 30.0;
  CrSpec cr;
  double sigma_n = 0.0;
  uint64_t seed = 0;
};

struct EyeFrameTruth {
  Vec2 cr_center;
  Vec2 pupil_center;
};

/// Throws std::invalid_argument when the CR or pupil lies outside the frame.
std::pair<ImagePatch, EyeFrameTruth> synth_eye_frame(const EyeFrameSpec& spec);

/// Throws std::invalid_argument when any type invariant is violated.
void validate(const SceneSpec& spec);

}  // namespace crloc::synth
