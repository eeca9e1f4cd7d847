#pragma once

#include "crloc/image.hpp"
#include "crloc/synthgen.hpp"

#include <optional>
#include <vector>

namespace crloc::localize {

enum class Method { threshold, radial_symmetry, intensity_com, cnn, oracle_com };

const char* method_name(Method m);

struct LocalizationResult {
  Vec2 center{0.0, 0.0};
  Method method = Method::threshold;
  double blob_area = 0.0;       // threshold only
  double threshold_used = 0.0;  // threshold only
  double residual = 0.0;        // radial symmetry: weighted objective at optimum
};

/// Blob acceptance criteria for the thresholding localizer.
struct ThresholdParams {
  double threshold = 0.5;  // normalized intensity in (0,1); strict > comparison
  double min_area = 1.0;
  double max_area = 1e9;
  double min_circularity = 0.0;  // 4*pi*area / perimeter^2
};

using BinaryImage = Eigen::Array<uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Background regions not 4-connected to the border become foreground.
BinaryImage fill_holes(const BinaryImage& binary);

struct Blob {
  std::vector<std::pair<int, int>> pixels;  // (x, y)
  double area = 0.0;
  double perimeter = 0.0;  // boundary pixel count (4-neighbor adjacency)
  double circularity = 0.0;
  Vec2 centroid{0.0, 0.0};
};

/// 8-connected components of a binary raster, with area/perimeter stats.
std::vector<Blob> label_blobs(const BinaryImage& binary);

/// Binarize (pixel > threshold), fill holes, filter blobs by area and
/// circularity, return the unweighted centroid of the largest survivor.
/// nullopt when no component survives.
std::optional<LocalizationResult> threshold_centroid(const ImagePatch& img,
                                                     const ThresholdParams& p);

/// Dark-blob variant used for pupil detection: foreground where
/// pixel < threshold.
std::optional<LocalizationResult> threshold_centroid_dark(const ImagePatch& img,
                                                          const ThresholdParams& p);

/// Gradient-based radial-symmetry center (Parthasarathy-style particle
/// localization): diagonal differences on the half-integer midpoint lattice,
/// 3x3 box smoothing of the components, then the closed-form weighted
/// least-squares intersection of the gradient lines.
/// nullopt for constant images or a singular normal matrix.
std::optional<LocalizationResult> radial_symmetry_center(const ImagePatch& img);

/// Intensity-weighted mean of pixel-center coordinates over the whole image.
/// nullopt when total intensity is zero.
std::optional<LocalizationResult> intensity_centroid(const ImagePatch& img);

/// Information-limit benchmark: render the CR alone (no background, no
/// noise) through the full quantization pipeline and take the intensity
/// centroid.
std::optional<LocalizationResult> com_oracle(const synth::CrSpec& cr, int width, int height);

/// Zero all pixels whose centers lie farther than `radius` from `center`.
ImagePatch apply_circular_mask(const ImagePatch& img, const Vec2& center, double radius);

}  // namespace crloc::localize
