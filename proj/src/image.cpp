#include "crloc/image.hpp"

namespace crloc {

ImagePatch quantize8(const RasterD& working) {
  RasterF out(working.rows(), working.cols());
  for (Eigen::Index r = 0; r < working.rows(); ++r) {
    for (Eigen::Index c = 0; c < working.cols(); ++c) {
      double v = working(r, c);
      if (v < 0.0) v = 0.0;
      if (v > 255.0) v = 255.0;
      out(r, c) = static_cast<float>(std::lround(v)) / 255.0f;
    }
  }
  return ImagePatch(std::move(out));
}

}  // namespace crloc
