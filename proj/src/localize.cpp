#include "crloc/localize.hpp"

#include <cmath>
#include <stdexcept>

namespace crloc::localize {

const char* method_name(Method m) {
  switch (m) {
    case Method::threshold: return "threshold";
    case Method::radial_symmetry: return "radial_symmetry";
    case Method::intensity_com: return "intensity_com";
    case Method::cnn: return "cnn";
    case Method::oracle_com: return "oracle_com";
  }
  return "?";
}

BinaryImage fill_holes(const BinaryImage& binary) {
  const int h = static_cast<int>(binary.rows());
  const int w = static_cast<int>(binary.cols());
  BinaryImage reach = BinaryImage::Zero(h, w);  // background reachable from border
  std::vector<std::pair<int, int>> stack;
  auto push = [&](int x, int y) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    if (binary(y, x) || reach(y, x)) return;
    reach(y, x) = 1;
    stack.emplace_back(x, y);
  };
  for (int x = 0; x < w; ++x) { push(x, 0); push(x, h - 1); }
  for (int y = 0; y < h; ++y) { push(0, y); push(w - 1, y); }
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    push(x + 1, y); push(x - 1, y); push(x, y + 1); push(x, y - 1);
  }
  BinaryImage out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = binary(y, x) || !reach(y, x) ? 1 : 0;
  return out;
}

std::vector<Blob> label_blobs(const BinaryImage& binary) {
  const int h = static_cast<int>(binary.rows());
  const int w = static_cast<int>(binary.cols());
  BinaryImage seen = BinaryImage::Zero(h, w);
  std::vector<Blob> blobs;
  std::vector<std::pair<int, int>> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      if (!binary(sy, sx) || seen(sy, sx)) continue;
      Blob blob;
      seen(sy, sx) = 1;
      stack.assign(1, {sx, sy});
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        blob.pixels.emplace_back(x, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            if (!binary(ny, nx) || seen(ny, nx)) continue;
            seen(ny, nx) = 1;
            stack.emplace_back(nx, ny);
          }
        }
      }
      double sx_sum = 0.0, sy_sum = 0.0;
      int boundary = 0;
      for (auto [x, y] : blob.pixels) {
        sx_sum += x;
        sy_sum += y;
        const bool edge = x == 0 || x == w - 1 || y == 0 || y == h - 1 ||
                          !binary(y, x - 1) || !binary(y, x + 1) || !binary(y - 1, x) ||
                          !binary(y + 1, x);
        if (edge) ++boundary;
      }
      blob.area = static_cast<double>(blob.pixels.size());
      blob.perimeter = boundary;
      blob.circularity =
          boundary > 0 ? 4.0 * M_PI * blob.area / (blob.perimeter * blob.perimeter) : 0.0;
      blob.centroid = Vec2(sx_sum / blob.area, sy_sum / blob.area);
      blobs.push_back(std::move(blob));
    }
  }
  return blobs;
}

namespace {

std::optional<LocalizationResult> centroid_of_binary(const BinaryImage& binary,
                                                     const ThresholdParams& p) {
  const BinaryImage filled = fill_holes(binary);
  const Blob* best = nullptr;
  std::vector<Blob> blobs = label_blobs(filled);
  for (const Blob& b : blobs) {
    if (b.area < p.min_area || b.area > p.max_area) continue;
    if (b.circularity < p.min_circularity) continue;
    if (!best || b.area > best->area) best = &b;
  }
  if (!best) return std::nullopt;
  LocalizationResult res;
  res.center = best->centroid;
  res.method = Method::threshold;
  res.blob_area = best->area;
  res.threshold_used = p.threshold;
  return res;
}

}  // namespace

std::optional<LocalizationResult> threshold_centroid(const ImagePatch& img,
                                                     const ThresholdParams& p) {
  if (img.empty()) throw std::invalid_argument("threshold_centroid: empty image");
  BinaryImage binary(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      binary(y, x) = img.at(x, y) > p.threshold ? 1 : 0;  // ties go to background
  return centroid_of_binary(binary, p);
}

std::optional<LocalizationResult> threshold_centroid_dark(const ImagePatch& img,
                                                          const ThresholdParams& p) {
  if (img.empty()) throw std::invalid_argument("threshold_centroid_dark: empty image");
  BinaryImage binary(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) binary(y, x) = img.at(x, y) < p.threshold ? 1 : 0;
  return centroid_of_binary(binary, p);
}

std::optional<LocalizationResult> radial_symmetry_center(const ImagePatch& img) {
  const int h = img.height(), w = img.width();
  if (h < 3 || w < 3) throw std::invalid_argument("radial_symmetry_center: image below 3x3");
  const int mh = h - 1, mw = w - 1;  // midpoint lattice

  // Diagonal differences at 2x2 block midpoints. du runs along (+x,-y),
  // dv along (-x,-y).
  RasterD du(mh, mw), dv(mh, mw);
  for (int j = 0; j < mh; ++j) {
    for (int i = 0; i < mw; ++i) {
      du(j, i) = static_cast<double>(img.at(i + 1, j)) - img.at(i, j + 1);
      dv(j, i) = static_cast<double>(img.at(i, j)) - img.at(i + 1, j + 1);
    }
  }

  // 3x3 box smoothing with zero padding and constant divisor 9.
  auto box3 = [](const RasterD& a) {
    const int rows = static_cast<int>(a.rows()), cols = static_cast<int>(a.cols());
    RasterD out(rows, cols);
    for (int j = 0; j < rows; ++j) {
      for (int i = 0; i < cols; ++i) {
        double s = 0.0;
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            const int jj = j + dj, ii = i + di;
            if (jj < 0 || jj >= rows || ii < 0 || ii >= cols) continue;
            s += a(jj, ii);
          }
        out(j, i) = s / 9.0;
      }
    }
    return out;
  };
  const RasterD fdu = box3(du);
  const RasterD fdv = box3(dv);

  // Rotate the diagonal components into the x-y frame and accumulate the
  // gradient-magnitude-weighted rough centroid.
  RasterD gx(mh, mw), gy(mh, mw), mag2(mh, mw);
  double msum = 0.0, mx = 0.0, my = 0.0;
  for (int j = 0; j < mh; ++j) {
    for (int i = 0; i < mw; ++i) {
      gx(j, i) = (fdu(j, i) - fdv(j, i)) / 2.0;
      gy(j, i) = -(fdu(j, i) + fdv(j, i)) / 2.0;
      mag2(j, i) = fdu(j, i) * fdu(j, i) + fdv(j, i) * fdv(j, i);
      msum += mag2(j, i);
      mx += mag2(j, i) * (i + 0.5);
      my += mag2(j, i) * (j + 0.5);
    }
  }
  if (msum <= 0.0) return std::nullopt;  // constant image
  const double cx0 = mx / msum, cy0 = my / msum;

  // Each midpoint p contributes a line along its gradient; minimize
  // sum_k w_k * dist(c, line_k)^2 via the 2x2 normal equations. With unit
  // normals n = (-gy, gx)/|g| this is A c = rhs, A = sum w n n^T.
  double a00 = 0.0, a01 = 0.0, a11 = 0.0, r0 = 0.0, r1 = 0.0;
  for (int j = 0; j < mh; ++j) {
    for (int i = 0; i < mw; ++i) {
      const double g2 = gx(j, i) * gx(j, i) + gy(j, i) * gy(j, i);
      if (g2 <= 0.0) continue;
      const double px = i + 0.5, py = j + 0.5;
      const double dist = std::hypot(px - cx0, py - cy0);
      const double wk = mag2(j, i) / std::max(dist, 1e-12);
      const double nx = -gy(j, i), ny = gx(j, i);
      const double s = wk / g2;  // normalizes n to unit length
      a00 += s * nx * nx;
      a01 += s * nx * ny;
      a11 += s * ny * ny;
      const double np = nx * px + ny * py;
      r0 += s * np * nx;
      r1 += s * np * ny;
    }
  }
  const double det = a00 * a11 - a01 * a01;
  const double scale = std::max({std::abs(a00), std::abs(a11), 1e-300});
  if (std::abs(det) < 1e-12 * scale * scale) return std::nullopt;
  LocalizationResult res;
  res.center = Vec2((a11 * r0 - a01 * r1) / det, (a00 * r1 - a01 * r0) / det);
  res.method = Method::radial_symmetry;
  // Weighted objective at the optimum, for diagnostics.
  double obj = 0.0;
  for (int j = 0; j < mh; ++j) {
    for (int i = 0; i < mw; ++i) {
      const double g2 = gx(j, i) * gx(j, i) + gy(j, i) * gy(j, i);
      if (g2 <= 0.0) continue;
      const double px = i + 0.5, py = j + 0.5;
      const double dist = std::hypot(px - cx0, py - cy0);
      const double wk = mag2(j, i) / std::max(dist, 1e-12);
      const double d = (-gy(j, i) * (res.center.x() - px) + gx(j, i) * (res.center.y() - py));
      obj += wk * d * d / g2;
    }
  }
  res.residual = obj;
  return res;
}

std::optional<LocalizationResult> intensity_centroid(const ImagePatch& img) {
  if (img.empty()) throw std::invalid_argument("intensity_centroid: empty image");
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double v = img.at(x, y);
      total += v;
      sx += v * x;
      sy += v * y;
    }
  }
  if (total <= 0.0) return std::nullopt;
  LocalizationResult res;
  res.center = Vec2(sx / total, sy / total);
  res.method = Method::intensity_com;
  return res;
}

std::optional<LocalizationResult> com_oracle(const synth::CrSpec& cr, int width, int height) {
  synth::SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.cr = cr;
  spec.background.present = false;
  spec.noise = {0.0, 0};
  auto res = intensity_centroid(synth::render_image(spec));
  if (res) res->method = Method::oracle_com;
  return res;
}

ImagePatch apply_circular_mask(const ImagePatch& img, const Vec2& center, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("apply_circular_mask: radius must be positive");
  ImagePatch out = img;
  const double r2 = radius * radius;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double d2 = (x - center.x()) * (x - center.x()) + (y - center.y()) * (y - center.y());
      if (d2 > r2) out.at(x, y) = 0.0f;
    }
  }
  return out;
}

}  // namespace crloc::localize
