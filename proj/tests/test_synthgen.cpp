#include "crloc/synthgen.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace crloc;
using namespace crloc::synth;

namespace {

SceneSpec black_bg_scene(double xc, double yc, double r, double A, int size = 180) {
  SceneSpec s;
  s.width = s.height = size;
  s.cr = CrSpec{Vec2(xc, yc), r, A};
  s.background.present = false;
  s.noise = {0.0, 0};
  return s;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("sigma_from_radius identity cases") {
  // 2*ln(A) = 1 at A = e^(1/2), so sigma equals the radius exactly.
  const double a = std::exp(0.5);
  CHECK(sigma_from_radius(3.0, a) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sigma_from_radius(7.5, a) == doctest::Approx(7.5).epsilon(1e-12));

  CHECK(sigma_from_radius(2.0, 10.0) == doctest::Approx(0.9319812035693121).epsilon(1e-9));

  CHECK_THROWS_AS(sigma_from_radius(5.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(sigma_from_radius(5.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(sigma_from_radius(-1.0, 10.0), std::domain_error);
}

TEST_CASE("saturation identity holds for random (r, A) before discretization") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double r = rng.uniform(0.5, 30.0);
    const double a = std::exp(rng.uniform(std::log(1.0001), std::log(20000.0)));
    const double sw = sigma_from_radius(r, a);
    const double g_at_r = a * std::exp(-(r * r) / (2.0 * sw * sw));
    CHECK(std::abs(g_at_r - 1.0) < 1e-12);
  }
}

TEST_CASE("huge amplitude saturates the full disk") {
  const double r = 6.0;
  const SceneSpec s = black_bg_scene(89.5, 89.5, r, 10000.0);
  const ImagePatch img = render_image(s);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double d = std::hypot(x - 89.5, y - 89.5);
      if (d < r) CHECK(img.at(x, y) == 1.0f);
    }
  }
}

TEST_CASE("centered CR is mirror symmetric") {
  const ImagePatch img = render_image(black_bg_scene(89.5, 89.5, 5.0, 200.0));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      CHECK(img.at(x, y) == img.at(179 - x, y));
      CHECK(img.at(x, y) == img.at(x, 179 - y));
    }
}

TEST_CASE("background-only render has a monotone 4-pixel raised-cosine ramp") {
  SceneSpec s;
  s.width = s.height = 64;
  s.background.present = true;
  s.background.line_point = Vec2(31.5, 31.5);
  s.background.line_angle = 3.0 * M_PI / 2.0;  // vertical line, light side right
  s.background.dark_intensity = 10.0;
  s.background.light_intensity = 128.0;
  s.background.edge_width = 4.0;
  s.noise = {0.0, 0};
  const ImagePatch img = render_image(s);
  CHECK(img.at(0, 32) == doctest::Approx(10.0f / 255.0f));
  CHECK(img.at(63, 32) == doctest::Approx(128.0f / 255.0f));
  // Monotone left-to-right everywhere; the ramp spans pixels 30..33 around
  // the line at x = 31.5 and rises strictly inside it.
  for (int y = 0; y < 64; ++y)
    for (int x = 1; x < 64; ++x) CHECK(img.at(x, y) >= img.at(x - 1, y));
  CHECK(img.at(29, 10) == doctest::Approx(10.0f / 255.0f));
  CHECK(img.at(34, 10) == doctest::Approx(128.0f / 255.0f));
  CHECK(img.at(30, 10) > img.at(29, 10));
  CHECK(img.at(31, 10) > img.at(30, 10));
  CHECK(img.at(32, 10) > img.at(31, 10));
  CHECK(img.at(33, 10) > img.at(32, 10));
  CHECK(img.at(34, 10) > img.at(33, 10));
}

TEST_CASE("every rendered pixel is on the 256-level grid") {
  SceneSpec s = black_bg_scene(40.25, 77.8, 4.0, 50.0);
  s.background.present = true;
  s.background.line_point = Vec2(45.0, 70.0);
  s.background.line_angle = 1.1;
  s.background.dark_intensity = 9.0;
  s.background.light_intensity = 120.0;
  s.noise = {12.0, 99};
  const ImagePatch img = render_image(s);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const float v = img.at(x, y);
      const float k = std::round(v * 255.0f);
      CHECK(v == k / 255.0f);
      CHECK(k >= 0.0f);
      CHECK(k <= 255.0f);
    }
}

TEST_CASE("rendering is bitwise deterministic given the scene") {
  SceneSpec s = black_bg_scene(33.3, 44.4, 3.0, 1000.0, 96);
  s.noise = {20.0, 1234567};
  const ImagePatch a = render_image(s);
  const ImagePatch b = render_image(s);
  CHECK(a == b);
}

TEST_CASE("noise-free intensity never increases with distance from the center") {
  const ImagePatch img = render_image(black_bg_scene(50.2, 61.7, 8.0, 50.0, 128));
  std::vector<std::pair<double, float>> by_dist;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      by_dist.emplace_back(std::hypot(x - 50.2, y - 61.7), img.at(x, y));
  std::sort(by_dist.begin(), by_dist.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 1; i < by_dist.size(); ++i)
    CHECK(by_dist[i].second <= by_dist[i - 1].second);
}

TEST_CASE("stage-1 draws respect every documented range") {
  const StageDistributions dist = StageDistributions::paper();
  double a_sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const SceneSpec s = sample_stage1(dist, derive_seed(5, i));
    REQUIRE(s.cr.has_value());
    CHECK(s.cr->radius >= 1.0);
    CHECK(s.cr->radius <= 30.0);
    CHECK(s.cr->center.x() >= s.cr->radius);
    CHECK(s.cr->center.x() <= 180.0 - s.cr->radius);
    CHECK(s.cr->center.y() >= s.cr->radius);
    CHECK(s.cr->center.y() <= 180.0 - s.cr->radius);
    CHECK(s.cr->amplitude >= 2.0);
    CHECK(s.cr->amplitude <= 20000.0);
    CHECK(s.background.present);
    CHECK(s.background.dark_intensity >= 1.0);
    CHECK(s.background.dark_intensity <= s.background.light_intensity);
    CHECK(s.background.light_intensity >= 32.0);
    CHECK(s.background.light_intensity <= 153.0);
    CHECK(s.background.line_angle >= 0.0);
    CHECK(s.background.line_angle <= 2.0 * M_PI);
    CHECK(s.noise.sigma >= 0.0);
    CHECK(s.noise.sigma <= 30.0);
    a_sum += s.cr->amplitude;
  }
  CHECK(std::abs(a_sum / n - 10001.0) / 10001.0 < 0.05);
}

TEST_CASE("stage-2 centers stay inside the 1.5-pixel central box") {
  const StageDistributions dist = StageDistributions::paper();
  for (int i = 0; i < 10000; ++i) {
    const SceneSpec s = sample_stage2(dist, derive_seed(6, i));
    CHECK(std::abs(s.cr->center.x() - 89.5) <= 0.75);
    CHECK(std::abs(s.cr->center.y() - 89.5) <= 0.75);
    CHECK(s.cr->radius >= 1.0);
    CHECK(s.cr->radius <= 30.0);
  }
}

TEST_CASE("equal seeds give identical scenes") {
  const StageDistributions dist = StageDistributions::paper();
  const SceneSpec a = sample_stage2(dist, 777);
  const SceneSpec b = sample_stage2(dist, 777);
  CHECK(a.cr->center == b.cr->center);
  CHECK(a.cr->radius == b.cr->radius);
  CHECK(a.cr->amplitude == b.cr->amplitude);
  CHECK(a.background.line_point == b.background.line_point);
  CHECK(a.background.line_angle == b.background.line_angle);
  CHECK(a.background.dark_intensity == b.background.dark_intensity);
  CHECK(a.background.light_intensity == b.background.light_intensity);
  CHECK(a.noise.sigma == b.noise.sigma);
  CHECK(a.noise.seed == b.noise.seed);
}

TEST_CASE("first 10k stage-1 scene specs are pairwise distinct") {
  const StageDistributions dist = StageDistributions::paper();
  std::set<std::tuple<double, double, double, double>> seen;
  for (int i = 0; i < 10000; ++i) {
    const SceneSpec s = sample_stage1(dist, derive_seed(9, i));
    seen.insert({s.cr->center.x(), s.cr->center.y(), s.cr->radius, s.cr->amplitude});
  }
  CHECK(seen.size() == 10000);
}

TEST_CASE("evaluation grid has the full Cartesian count and semantics") {
  const auto grid = build_eval_grid();
  CHECK(grid.size() == 36000);

  // E = 0 puts the line through the CR center; E = -1 one radius left.
  const GridPoint p0{8.0, 200.0, 0.0, 0.0, 128.0};
  const SceneSpec s0 = make_grid_scene(p0, 180, Vec2(89.5, 89.5), 0);
  CHECK(s0.background.present);
  CHECK(s0.background.line_point.x() == doctest::Approx(89.5));
  const GridPoint pm1{8.0, 200.0, 0.0, -1.0, 128.0};
  const SceneSpec sm1 = make_grid_scene(pm1, 180, Vec2(89.5, 89.5), 0);
  CHECK(sm1.background.line_point.x() == doctest::Approx(89.5 - 8.0));

  const GridPoint png{8.0, 200.0, 0.0, std::nullopt, 128.0};
  CHECK_FALSE(make_grid_scene(png, 180, Vec2(89.5, 89.5), 0).background.present);

  // The light side sits left of the line: E > 0 keeps the CR center gray.
  const ImagePatch img = render_image(make_grid_scene(pm1, 180, Vec2(89.5, 89.5), 0));
  CHECK(img.at(20, 89) == doctest::Approx(128.0f / 255.0f));  // far left is light
  CHECK(img.at(170, 89) == doctest::Approx(1.0f / 255.0f));   // far right is dark
}

TEST_CASE("strided grid subsampling keeps the first element of each dimension") {
  const auto grid = build_eval_grid({2, 2, 2, 2, 2});
  CHECK(grid.size() == 5 * 3 * 5 * 4 * 5);
  CHECK(grid.front().r == 2.0);
  CHECK_FALSE(grid.front().E.has_value());
}

TEST_CASE("synthetic eye frames compose sclera, iris, pupil and CR") {
  EyeFrameSpec spec;
  spec.width = spec.height = 240;
  spec.iris_center = Vec2(120.0, 120.0);
  spec.iris_radius = 80.0;
  spec.pupil_center = Vec2(120.0, 120.0);
  spec.pupil_radius = 30.0;
  spec.cr = CrSpec{Vec2(120.0, 120.0), 6.0, 10000.0};

  SUBCASE("CR fully inside the pupil sits on a uniform dark background") {
    auto [img, truth] = synth_eye_frame(spec);
    CHECK(truth.cr_center == spec.cr.center);
    CHECK(truth.pupil_center == spec.pupil_center);
    // Ring between the CR tails and the pupil boundary is pure pupil level.
    for (int x = 138; x < 148; ++x)
      CHECK(img.at(x, 120) == doctest::Approx(30.0f / 255.0f));
  }

  SUBCASE("pupil pixels are strictly darker than iris pixels without noise") {
    auto [img, truth] = synth_eye_frame(spec);
    CHECK(img.at(120, 135) < img.at(120, 180));  // pupil vs iris
    CHECK(img.at(120, 180) < img.at(120, 215));  // iris vs sclera
  }

  SUBCASE("CR straddling the pupil edge reproduces a two-luminance background") {
    spec.cr.center = Vec2(150.0, 120.0);  // on the pupil boundary
    auto [img, truth] = synth_eye_frame(spec);
    CHECK(img.at(138, 120) == doctest::Approx(30.0f / 255.0f));   // pupil side
    CHECK(img.at(162, 120) == doctest::Approx(100.0f / 255.0f));  // iris side
  }

  SUBCASE("out-of-frame CR or pupil is rejected") {
    spec.cr.center = Vec2(400.0, 120.0);
    CHECK_THROWS_AS(synth_eye_frame(spec), std::invalid_argument);
    spec.cr.center = Vec2(120.0, 120.0);
    spec.pupil_center = Vec2(-10.0, 120.0);
    CHECK_THROWS_AS(synth_eye_frame(spec), std::invalid_argument);
  }
}

TEST_CASE("scene validation rejects invariant violations") {
  SceneSpec s = black_bg_scene(10.0, 10.0, 3.0, 50.0, 64);
  CHECK_NOTHROW(validate(s));
  s.cr->amplitude = 1.0;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s.cr->amplitude = 50.0;
  s.cr->center = Vec2(100.0, 10.0);
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s.cr->center = Vec2(10.0, 10.0);
  s.background.present = true;
  s.background.dark_intensity = 0.0;
  s.background.light_intensity = 100.0;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s.background.dark_intensity = 120.0;  // above light
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
}

}  // TEST_SUITE
