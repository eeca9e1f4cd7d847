#include "crloc/evaluate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace crloc::eval {

MethodSpec make_threshold_method(const localize::ThresholdParams& params, int image_size) {
  return {localize::Method::threshold, image_size, [params](const ImagePatch& img) {
            auto r = localize::threshold_centroid(img, params);
            return r ? std::optional<Vec2>(r->center) : std::nullopt;
          }};
}

MethodSpec make_radial_symmetry_method(int image_size) {
  return {localize::Method::radial_symmetry, image_size, [](const ImagePatch& img) {
            auto r = localize::radial_symmetry_center(img);
            return r ? std::optional<Vec2>(r->center) : std::nullopt;
          }};
}

MethodSpec make_intensity_method(int image_size) {
  return {localize::Method::intensity_com, image_size, [](const ImagePatch& img) {
            auto r = localize::intensity_centroid(img);
            return r ? std::optional<Vec2>(r->center) : std::nullopt;
          }};
}

MethodSpec make_oracle_method(int image_size) {
  // The oracle is the intensity centroid on a black-background render;
  // the sweep provides exactly that image when E is absent and sigma_n = 0.
  return {localize::Method::oracle_com, image_size, [](const ImagePatch& img) {
            auto r = localize::intensity_centroid(img);
            return r ? std::optional<Vec2>(r->center) : std::nullopt;
          }};
}

MethodSpec make_cnn_method(const neural::NetworkF* net) {
  if (!net) throw std::invalid_argument("make_cnn_method: null network");
  if (net->spec().input_h != net->spec().input_w)
    throw std::invalid_argument("make_cnn_method: non-square input");
  return {localize::Method::cnn, net->spec().input_h,
          [net](const ImagePatch& img) { return std::optional<Vec2>(net->predict(img)); }};
}

void summarize(SweepResult& r) {
  double sum_abs = 0.0, sum = 0.0, max_abs = 0.0;
  int valid = 0;
  for (double e : r.errors) {
    if (std::isnan(e)) continue;
    ++valid;
    sum += e;
    sum_abs += std::abs(e);
    max_abs = std::max(max_abs, std::abs(e));
  }
  r.fail_count = static_cast<int>(r.errors.size()) - valid;
  if (valid > 0) {
    r.mean_abs = sum_abs / valid;
    r.max_abs = max_abs;
    r.bias = sum / valid;
  } else {
    r.mean_abs = r.max_abs = r.bias = std::numeric_limits<double>::quiet_NaN();
  }
}

SweepResult subpixel_sweep(const synth::GridPoint& point, const MethodSpec& method,
                           uint64_t seed) {
  SweepResult res;
  res.point = point;
  res.method = method.id;
  res.errors.resize(kSweepSteps);
  const double cy = (method.image_size - 1) / 2.0;
  const double x0 = (method.image_size - 1) / 2.0 - 0.5;
  for (int k = 0; k < kSweepSteps; ++k) {
    const double xc = x0 + kSweepDelta * k;
    const synth::SceneSpec scene =
        synth::make_grid_scene(point, method.image_size, Vec2(xc, cy), derive_seed(seed, k));
    const ImagePatch img = synth::render_image(scene);
    const std::optional<Vec2> est = method.fn(img);
    res.errors[k] = est ? est->x() - xc : std::numeric_limits<double>::quiet_NaN();
  }
  summarize(res);
  return res;
}

std::vector<SweepResult> grid_eval(const std::vector<synth::GridPoint>& grid,
                                   const std::vector<MethodSpec>& methods, uint64_t seed,
                                   int jobs) {
  const size_t total = grid.size() * methods.size();
  std::vector<SweepResult> out(total);
  auto run_range = [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const size_t gi = idx / methods.size();
      const size_t mi = idx % methods.size();
      // Row seed depends only on the grid cell, so methods are paired.
      out[idx] = subpixel_sweep(grid[gi], methods[mi], derive_seed(seed, gi));
    }
  };
  if (jobs <= 1 || total < 2) {
    run_range(0, total);
  } else {
    const size_t workers = std::min<size_t>(jobs, total);
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
      const size_t lo = total * w / workers;
      const size_t hi = total * (w + 1) / workers;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

std::vector<SweepResult> optimal_benchmark(uint64_t seed, int image_size, int jobs) {
  std::vector<synth::GridPoint> grid;
  for (double r : {2, 4, 6, 8, 10, 12, 14, 16, 18})
    for (double a : {10, 50, 200, 1000, 10000})
      grid.push_back({r, a, 0.0, std::nullopt, 0.0});
  return grid_eval(grid, {make_oracle_method(image_size)}, seed, jobs);
}

PrecisionResult precision_sweep(const synth::GridPoint& point, const MethodSpec& method,
                                int n_frames, uint64_t seed) {
  if (n_frames < 2) throw std::invalid_argument("precision_sweep: need at least 2 frames");
  const double c = (method.image_size - 1) / 2.0;
  const Vec2 cr_center(c + 0.25, c + 0.25);
  std::vector<std::optional<Vec2>> estimates(n_frames);
  PrecisionResult res;
  res.frames = n_frames;
  for (int i = 0; i < n_frames; ++i) {
    const synth::SceneSpec scene = synth::make_grid_scene(
        point, method.image_size, cr_center, derive_seed(seed, static_cast<uint64_t>(i)));
    estimates[i] = method.fn(synth::render_image(scene));
    if (!estimates[i]) ++res.fail_count;
  }
  double sum = 0.0;
  int pairs = 0;
  for (int i = 0; i + 1 < n_frames; ++i) {
    if (!estimates[i] || !estimates[i + 1]) continue;
    sum += (*estimates[i + 1] - *estimates[i]).squaredNorm();
    ++pairs;
  }
  res.rms = pairs > 0 ? std::sqrt(sum / pairs) : std::numeric_limits<double>::quiet_NaN();
  return res;
}

}  // namespace crloc::eval
