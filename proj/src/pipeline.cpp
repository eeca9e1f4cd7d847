#include "crloc/pipeline.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace crloc::pipeline {

void PipelineConfig::validate() const {
  if (cutout_size <= 0) throw std::invalid_argument("PipelineConfig: cutout_size <= 0");
  if (mask_radius <= 0.0 || mask_radius >= cutout_size / 2.0)
    throw std::invalid_argument("PipelineConfig: need 0 < mask_radius < cutout_size/2");
  if (downsample != 1 && downsample != 2)
    throw std::invalid_argument("PipelineConfig: downsample must be 1 or 2");
  if (refiner == Refiner::cnn) {
    if (!model) throw std::invalid_argument("PipelineConfig: cnn refiner needs a model");
    if (model->spec().input_h != cutout_size || model->spec().input_w != cutout_size)
      throw std::invalid_argument("PipelineConfig: cutout_size must match the model input");
  }
}

namespace {

ImagePatch crop_roi(const ImagePatch& frame, const Roi& roi, Eigen::Vector2i* offset) {
  if (roi.w <= 0 || roi.h <= 0) {
    *offset = {0, 0};
    return frame;
  }
  const int x0 = std::max(0, roi.x);
  const int y0 = std::max(0, roi.y);
  const int x1 = std::min(frame.width(), roi.x + roi.w);
  const int y1 = std::min(frame.height(), roi.y + roi.h);
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("coarse_detect: ROI outside frame");
  *offset = {x0, y0};
  ImagePatch out(x1 - x0, y1 - y0);
  out.raster() = frame.raster().block(y0, x0, y1 - y0, x1 - x0);
  return out;
}

}  // namespace

CoarseResult coarse_detect(const ImagePatch& frame, const PipelineConfig& cfg) {
  Eigen::Vector2i off;
  const ImagePatch view = crop_roi(frame, cfg.roi, &off);
  CoarseResult res;
  if (auto cr = localize::threshold_centroid(view, cfg.cr_blob))
    res.cr = cr->center + Vec2(off.x(), off.y());
  if (auto pupil = localize::threshold_centroid_dark(view, cfg.pupil_blob))
    res.pupil = pupil->center + Vec2(off.x(), off.y());
  return res;
}

ImagePatch extract_cutout(const ImagePatch& frame, const Vec2& center, int size,
                          Eigen::Vector2i* origin_out) {
  // Anchor the integer origin so the center falls in [c, c+1) around the
  // patch's geometric center c = (size-1)/2; combined with sub-pixel coarse
  // error the feature stays within half a pixel of the patch center.
  const int half = size / 2;
  const int ox = static_cast<int>(std::lround(center.x() - 0.5)) - (half - 1);
  const int oy = static_cast<int>(std::lround(center.y() - 0.5)) - (half - 1);
  ImagePatch out(size, size);
  for (int y = 0; y < size; ++y) {
    const int fy = y + oy;
    if (fy < 0 || fy >= frame.height()) continue;  // stays zero
    for (int x = 0; x < size; ++x) {
      const int fx = x + ox;
      if (fx < 0 || fx >= frame.width()) continue;
      out.at(x, y) = frame.at(fx, fy);
    }
  }
  if (origin_out) *origin_out = {ox, oy};
  return out;
}

namespace {

RefineResult refine_impl(const ImagePatch& frame, const Vec2& coarse_cr,
                         const PipelineConfig& cfg, double mask_radius) {
  RefineResult res;
  if (cfg.refiner == Refiner::none) {
    res.center = coarse_cr;
    return res;
  }
  Eigen::Vector2i origin;
  ImagePatch patch = extract_cutout(frame, coarse_cr, cfg.cutout_size, &origin);
  const Vec2 patch_center(patch.center_x(), patch.center_y());
  patch = localize::apply_circular_mask(patch, patch_center, mask_radius);

  std::optional<Vec2> est;
  if (cfg.refiner == Refiner::radial_symmetry) {
    if (auto r = localize::radial_symmetry_center(patch)) est = r->center;
  } else {
    est = cfg.model->predict(patch);
  }
  if (!est) {
    res.center = coarse_cr;
    res.fallback = true;
    return res;
  }
  res.center = *est + Vec2(origin.x(), origin.y());
  return res;
}

}  // namespace

RefineResult refine(const ImagePatch& frame, const Vec2& coarse_cr, const PipelineConfig& cfg) {
  cfg.validate();
  return refine_impl(frame, coarse_cr, cfg,
                     cfg.downsample == 2 ? cfg.mask_radius / 2.0 : cfg.mask_radius);
}

ImagePatch downsample2(const ImagePatch& frame) {
  const int ow = frame.width() / 2;
  const int oh = frame.height() / 2;
  if (ow == 0 || oh == 0) throw std::invalid_argument("downsample2: frame too small");
  RasterD working(oh, ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double s = static_cast<double>(frame.at(2 * x, 2 * y)) +
                       frame.at(2 * x + 1, 2 * y) + frame.at(2 * x, 2 * y + 1) +
                       frame.at(2 * x + 1, 2 * y + 1);
      working(y, x) = s * 255.0 / 4.0;
    }
  }
  return quantize8(working);
}

namespace {

FrameResult process_frame(const ImagePatch& frame, int index, const PipelineConfig& cfg) {
  FrameResult res;
  res.frame_index = index;

  const bool half = cfg.downsample == 2;
  ImagePatch work = half ? downsample2(frame) : frame;
  PipelineConfig wcfg = cfg;
  if (half) {
    // ROI is given in full-resolution pixels; map it onto the half frame.
    wcfg.roi = {cfg.roi.x / 2, cfg.roi.y / 2, cfg.roi.w / 2, cfg.roi.h / 2};
  }
  auto to_full = [&](const Vec2& p) { return half ? Vec2(2.0 * p + Vec2(0.5, 0.5)) : p; };

  const CoarseResult coarse = coarse_detect(work, wcfg);
  if (coarse.pupil) res.pupil = to_full(*coarse.pupil);
  if (coarse.cr) res.cr_threshold = to_full(*coarse.cr);

  if (coarse.cr && cfg.refiner != Refiner::none) {
    const RefineResult r =
        refine_impl(work, *coarse.cr, wcfg, half ? cfg.mask_radius / 2.0 : cfg.mask_radius);
    res.cr_refined = to_full(r.center);
    res.refine_fallback = r.fallback;
  }
  return res;
}

}  // namespace

std::vector<FrameResult> process_sequence(std::span<const ImagePatch> frames,
                                          const PipelineConfig& cfg, int jobs) {
  cfg.validate();
  std::vector<FrameResult> out(frames.size());
  auto run_range = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i)
      out[i] = process_frame(frames[i], static_cast<int>(i), cfg);
  };
  if (jobs <= 1 || frames.size() < 2) {
    run_range(0, frames.size());
  } else {
    const size_t workers = std::min<size_t>(jobs, frames.size());
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w)
      pool.emplace_back(run_range, frames.size() * w / workers,
                        frames.size() * (w + 1) / workers);
    for (auto& t : pool) t.join();
  }
  return out;
}

std::vector<ThresholdScanRow> scan_cr_thresholds(std::span<const ImagePatch> frames,
                                                 const PipelineConfig& cfg,
                                                 std::span<const double> thresholds) {
  std::vector<ThresholdScanRow> out;
  out.reserve(thresholds.size());
  for (double th : thresholds) {
    PipelineConfig c = cfg;
    c.cr_blob.threshold = th;
    c.refiner = Refiner::none;
    ThresholdScanRow row;
    row.threshold = th;
    std::vector<std::optional<Vec2>> centers;
    centers.reserve(frames.size());
    for (const ImagePatch& f : frames) {
      const CoarseResult r = coarse_detect(f, c);
      centers.push_back(r.cr);
      if (!r.cr) ++row.fail_count;
    }
    double sum = 0.0;
    int pairs = 0;
    for (size_t i = 0; i + 1 < centers.size(); ++i) {
      if (!centers[i] || !centers[i + 1]) continue;
      sum += (*centers[i + 1] - *centers[i]).squaredNorm();
      ++pairs;
    }
    row.rms_s2s = pairs > 0 ? std::sqrt(sum / pairs) : std::numeric_limits<double>::quiet_NaN();
    out.push_back(row);
  }
  return out;
}

}  // namespace crloc::pipeline
