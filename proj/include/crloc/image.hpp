#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace crloc {

using Vec2 = Eigen::Vector2d;

/// Dense raster templated on scalar, indexed (row = y, col = x).
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RasterF = Raster<float>;
using RasterD = Raster<double>;

/// 8-bit-quantized grayscale image: every sample is k/255 for k in [0,255].
///
/// Coordinate convention: pixel (x, y) has its center at continuous
/// coordinate (x, y). A W-pixel-wide image spans [-0.5, W-0.5] and its
/// geometric center is ((W-1)/2, (H-1)/2).
class ImagePatch {
public:
  ImagePatch() = default;
  ImagePatch(int width, int height) : pix_(RasterF::Zero(height, width)) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("ImagePatch: size must be positive");
  }
  explicit ImagePatch(RasterF quantized) : pix_(std::move(quantized)) {}

  int width() const { return static_cast<int>(pix_.cols()); }
  int height() const { return static_cast<int>(pix_.rows()); }
  bool empty() const { return pix_.size() == 0; }

  float at(int x, int y) const { return pix_(y, x); }
  float& at(int x, int y) { return pix_(y, x); }

  /// Intensity as an integer level in [0, 255].
  int level(int x, int y) const { return static_cast<int>(std::lround(pix_(y, x) * 255.0f)); }

  const RasterF& raster() const { return pix_; }
  RasterF& raster() { return pix_; }

  double center_x() const { return (width() - 1) / 2.0; }
  double center_y() const { return (height() - 1) / 2.0; }

  bool contains(double x, double y) const {
    return x >= -0.5 && x <= width() - 0.5 && y >= -0.5 && y <= height() - 0.5;
  }

  bool operator==(const ImagePatch& o) const {
    return pix_.rows() == o.pix_.rows() && pix_.cols() == o.pix_.cols() &&
           (pix_ == o.pix_).all();
  }

private:
  RasterF pix_;
};

/// Clamp an 8-bit-unit working raster to [0,255], round to integer levels
/// and rescale to [0,1]. The last stage of every rendering pipeline.
ImagePatch quantize8(const RasterD& working);

}  // namespace crloc
