#include "crloc/synthgen.hpp"

#include <cmath>
#include <stdexcept>

namespace crloc::synth {

double sigma_from_radius(double radius, double amplitude) {
  if (radius <= 0.0) throw std::domain_error("sigma_from_radius: radius must be positive");
  if (amplitude <= 1.0)
    throw std::domain_error("sigma_from_radius: amplitude must exceed 1 (no saturation)");
  return radius / std::sqrt(2.0 * std::log(amplitude));
}

void validate(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0)
    throw std::invalid_argument("SceneSpec: image size must be positive");
  if (spec.cr) {
    if (spec.cr->radius <= 0.0) throw std::invalid_argument("CrSpec: radius must be positive");
    if (spec.cr->amplitude <= 1.0) throw std::invalid_argument("CrSpec: amplitude must exceed 1");
    const Vec2& c = spec.cr->center;
    if (c.x() < -0.5 || c.x() > spec.width - 0.5 || c.y() < -0.5 || c.y() > spec.height - 0.5)
      throw std::invalid_argument("CrSpec: center outside image bounds");
  }
  const BackgroundSpec& bg = spec.background;
  if (bg.present) {
    if (bg.dark_intensity <= 0.0 || bg.dark_intensity > bg.light_intensity ||
        bg.light_intensity > 255.0)
      throw std::invalid_argument("BackgroundSpec: need 0 < dark <= light <= 255");
    if (bg.edge_width < 0.0) throw std::invalid_argument("BackgroundSpec: edge_width < 0");
  }
  if (spec.noise.sigma < 0.0) throw std::invalid_argument("NoiseSpec: sigma < 0");
}

RasterD render_background(const BackgroundSpec& bg, int width, int height) {
  RasterD out = RasterD::Zero(height, width);
  if (!bg.present) return out;
  // Signed distance to the dividing line, positive on the light side.
  const double nx = -std::sin(bg.line_angle);
  const double ny = std::cos(bg.line_angle);
  const double w = bg.edge_width;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double d = (x - bg.line_point.x()) * nx + (y - bg.line_point.y()) * ny;
      double v;
      if (d >= w / 2.0) {
        v = bg.light_intensity;
      } else if (d <= -w / 2.0 || w == 0.0) {
        v = bg.dark_intensity;
      } else {
        v = bg.dark_intensity +
            (bg.light_intensity - bg.dark_intensity) * (1.0 + std::sin(M_PI * d / w)) / 2.0;
      }
      out(y, x) = v;
    }
  }
  return out;
}

ImagePatch render_image(const SceneSpec& spec) {
  validate(spec);
  RasterD working = render_background(spec.background, spec.width, spec.height);
  if (spec.cr) {
    const CrSpec& cr = *spec.cr;
    const double sw = sigma_from_radius(cr.radius, cr.amplitude);
    const double inv2s2 = 1.0 / (2.0 * sw * sw);
    for (int y = 0; y < spec.height; ++y) {
      const double dy2 = (y - cr.center.y()) * (y - cr.center.y());
      for (int x = 0; x < spec.width; ++x) {
        const double dx2 = (x - cr.center.x()) * (x - cr.center.x());
        const double g = 255.0 * cr.amplitude * std::exp(-(dx2 + dy2) * inv2s2);
        if (g > working(y, x)) working(y, x) = g;
      }
    }
  }
  if (spec.noise.sigma > 0.0) {
    Rng rng(spec.noise.seed);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        working(y, x) += spec.noise.sigma * rng.normal();
  }
  return quantize8(working);
}

LabeledSample render_scene(const SceneSpec& spec) {
  if (!spec.cr) throw std::invalid_argument("render_scene: spec has no CR");
  LabeledSample s;
  s.image = render_image(spec);
  s.truth = spec.cr->center;
  s.scene = spec;
  return s;
}

namespace {

// Draw order is part of the determinism contract; keep it fixed.
SceneSpec sample_common(const StageDistributions& dist, Rng& rng, bool stage2) {
  SceneSpec spec;
  spec.width = spec.height = dist.image_size;

  CrSpec cr;
  cr.radius = rng.uniform(dist.r_min, dist.r_max);
  if (stage2) {
    const double c = (dist.image_size - 1) / 2.0;
    const double half = dist.stage2_center_span / 2.0;
    cr.center.x() = rng.uniform(c - half, c + half);
    cr.center.y() = rng.uniform(c - half, c + half);
  } else {
    cr.center.x() = rng.uniform(cr.radius, dist.image_size - cr.radius);
    cr.center.y() = rng.uniform(cr.radius, dist.image_size - cr.radius);
  }
  cr.amplitude = rng.uniform(dist.a_min, dist.a_max);
  spec.cr = cr;

  BackgroundSpec bg;
  bg.present = true;
  bg.line_point.x() = rng.normal(cr.center.x(), dist.line_point_sigma_r * cr.radius);
  bg.line_point.y() = rng.normal(cr.center.y(), dist.line_point_sigma_r * cr.radius);
  bg.line_angle = rng.uniform(0.0, 2.0 * M_PI);
  bg.light_intensity = rng.uniform(dist.light_min, dist.light_max);
  // Exponential dark level, redrawn while it conflicts with the light level.
  do {
    bg.dark_intensity = dist.dark_offset + rng.exponential(dist.dark_exp_scale);
  } while (bg.dark_intensity > std::min(bg.light_intensity, 255.0));
  bg.edge_width = dist.edge_width;
  spec.background = bg;

  spec.noise.sigma = rng.uniform(dist.sigma_n_min, dist.sigma_n_max);
  spec.noise.seed = rng.raw();
  return spec;
}

}  // namespace

SceneSpec sample_stage1(const StageDistributions& dist, uint64_t seed) {
  Rng rng(seed);
  return sample_common(dist, rng, false);
}

SceneSpec sample_stage2(const StageDistributions& dist, uint64_t seed) {
  Rng rng(seed);
  return sample_common(dist, rng, true);
}

std::vector<GridPoint> build_eval_grid(const GridStride& stride) {
  static const double kR[] = {2, 4, 6, 8, 10, 12, 14, 16, 18};
  static const double kA[] = {10, 50, 200, 1000, 10000};
  static const double kSigma[] = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18};
  static const std::optional<double> kE[] = {std::nullopt, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5};
  static const double kI[] = {38, 51, 64, 77, 89, 102, 115, 128, 140, 153};

  if (stride.r < 1 || stride.A < 1 || stride.sigma_n < 1 || stride.E < 1 || stride.I < 1)
    throw std::invalid_argument("build_eval_grid: stride must be >= 1");

  std::vector<GridPoint> grid;
  for (size_t ir = 0; ir < std::size(kR); ir += stride.r)
    for (size_t ia = 0; ia < std::size(kA); ia += stride.A)
      for (size_t is = 0; is < std::size(kSigma); is += stride.sigma_n)
        for (size_t ie = 0; ie < std::size(kE); ie += stride.E)
          for (size_t ii = 0; ii < std::size(kI); ii += stride.I)
            grid.push_back({kR[ir], kA[ia], kSigma[is], kE[ie], kI[ii]});
  return grid;
}

SceneSpec make_grid_scene(const GridPoint& p, int image_size, const Vec2& cr_center,
                          uint64_t noise_seed) {
  SceneSpec spec;
  spec.width = spec.height = image_size;
  spec.cr = CrSpec{cr_center, p.r, p.A};
  if (p.E) {
    BackgroundSpec bg;
    bg.present = true;
    // Vertical line at E*r right of the CR center, light side on the left:
    // the normal (-sin, cos) at angle pi/2 points in -x.
    bg.line_point = Vec2(cr_center.x() + *p.E * p.r, cr_center.y());
    bg.line_angle = M_PI / 2.0;
    bg.dark_intensity = 1.0;
    bg.light_intensity = p.I;
    bg.edge_width = 4.0;
    spec.background = bg;
  }
  spec.noise = NoiseSpec{p.sigma_n, noise_seed};
  return spec;
}

std::pair<ImagePatch, EyeFrameTruth> synth_eye_frame(const EyeFrameSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0)
    throw std::invalid_argument("synth_eye_frame: frame size must be positive");
  auto inside = [&](const Vec2& c) {
    return c.x() >= -0.5 && c.x() <= spec.width - 0.5 && c.y() >= -0.5 &&
           c.y() <= spec.height - 0.5;
  };
  if (!inside(spec.cr.center)) throw std::invalid_argument("synth_eye_frame: CR outside frame");
  if (!inside(spec.pupil_center))
    throw std::invalid_argument("synth_eye_frame: pupil outside frame");

  RasterD working(spec.height, spec.width);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double v = spec.sclera_intensity;
      const double di = std::hypot(x - spec.iris_center.x(), y - spec.iris_center.y());
      if (di <= spec.iris_radius) v = spec.iris_intensity;
      const double dp = std::hypot(x - spec.pupil_center.x(), y - spec.pupil_center.y());
      if (dp <= spec.pupil_radius) v = spec.pupil_intensity;
      working(y, x) = v;
    }
  }
  const double sw = sigma_from_radius(spec.cr.radius, spec.cr.amplitude);
  const double inv2s2 = 1.0 / (2.0 * sw * sw);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double d2 = (x - spec.cr.center.x()) * (x - spec.cr.center.x()) +
                        (y - spec.cr.center.y()) * (y - spec.cr.center.y());
      const double g = 255.0 * spec.cr.amplitude * std::exp(-d2 * inv2s2);
      if (g > working(y, x)) working(y, x) = g;
    }
  }
  if (spec.sigma_n > 0.0) {
    Rng rng(spec.seed);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) working(y, x) += spec.sigma_n * rng.normal();
  }
  return {quantize8(working), EyeFrameTruth{spec.cr.center, spec.pupil_center}};
}

}  // namespace crloc::synth
