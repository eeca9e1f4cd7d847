#include "crloc/pipeline.hpp"

#include <doctest.h>

#include <cmath>

using namespace crloc;
using namespace crloc::pipeline;

namespace {

synth::EyeFrameSpec eye_spec(double cr_x, double cr_y, double sigma_n = 0.0,
                             uint64_t seed = 0) {
  synth::EyeFrameSpec spec;
  spec.width = spec.height = 240;
  spec.sclera_intensity = 160.0;  // safely below the CR threshold
  spec.iris_center = Vec2(120.0, 120.0);
  spec.iris_radius = 85.0;
  spec.pupil_center = Vec2(118.0, 122.0);
  spec.pupil_radius = 34.0;
  spec.cr = synth::CrSpec{Vec2(cr_x, cr_y), 5.0, 8000.0};
  spec.sigma_n = sigma_n;
  spec.seed = seed;
  return spec;
}

PipelineConfig base_cfg() {
  PipelineConfig cfg;
  cfg.cr_blob = {0.75, 3.0, 5000.0, 0.3};
  cfg.pupil_blob = {0.25, 200.0, 100000.0, 0.3};
  cfg.cutout_size = 64;
  cfg.mask_radius = 17.0;
  return cfg;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("coarse detection finds pupil and CR within half a pixel on clean frames") {
  const auto spec = eye_spec(112.0, 118.0);
  auto [frame, truth] = synth::synth_eye_frame(spec);
  const CoarseResult res = coarse_detect(frame, base_cfg());
  REQUIRE(res.cr.has_value());
  REQUIRE(res.pupil.has_value());
  CHECK((*res.cr - truth.cr_center).norm() < 0.5);
  CHECK((*res.pupil - truth.pupil_center).norm() < 0.5);
}

TEST_CASE("missing features raise per-feature flags, not errors") {
  ImagePatch gray(128, 128);
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) gray.at(x, y) = 128.0f / 255.0f;
  const CoarseResult res = coarse_detect(gray, base_cfg());
  CHECK_FALSE(res.cr.has_value());
  CHECK_FALSE(res.pupil.has_value());
}

TEST_CASE("blob filters choose the conforming blob, not the largest") {
  ImagePatch img(128, 128);
  // Small conforming square and a big out-of-bounds one.
  for (int y = 20; y < 24; ++y)
    for (int x = 20; x < 24; ++x) img.at(x, y) = 1.0f;
  for (int y = 60; y < 120; ++y)
    for (int x = 60; x < 120; ++x) img.at(x, y) = 1.0f;
  PipelineConfig cfg = base_cfg();
  cfg.cr_blob.max_area = 100.0;
  const CoarseResult res = coarse_detect(img, cfg);
  REQUIRE(res.cr.has_value());
  CHECK(res.cr->x() == doctest::Approx(21.5));
  CHECK(res.cr->y() == doctest::Approx(21.5));
}

TEST_CASE("ROI restricts detection") {
  const auto spec = eye_spec(112.0, 118.0);
  auto [frame, truth] = synth::synth_eye_frame(spec);
  PipelineConfig cfg = base_cfg();
  cfg.roi = {0, 0, 60, 60};  // excludes the CR
  const CoarseResult res = coarse_detect(frame, cfg);
  CHECK_FALSE(res.cr.has_value());
  cfg.roi = {80, 80, 100, 100};
  const CoarseResult res2 = coarse_detect(frame, cfg);
  REQUIRE(res2.cr.has_value());
  CHECK((*res2.cr - truth.cr_center).norm() < 0.5);  // back in frame coordinates
}

TEST_CASE("cutouts anchor the feature within half a pixel of the patch center") {
  ImagePatch frame(200, 200);
  for (int y = 0; y < 200; ++y)
    for (int x = 0; x < 200; ++x) frame.at(x, y) = static_cast<float>((x * 7 + y * 13) % 256) / 255.0f;
  for (double cx : {100.0, 100.3, 100.49, 100.51, 100.99, 101.0}) {
    Eigen::Vector2i origin;
    const ImagePatch patch = extract_cutout(frame, Vec2(cx, 77.25), 64, &origin);
    const double local_x = cx - origin.x();
    CHECK(local_x >= 31.0);
    CHECK(local_x < 32.0);  // within [c - 0.5, c + 0.5) of the 31.5 center
    // Content must match the frame on the overlap.
    CHECK(patch.at(10, 10) == frame.at(10 + origin.x(), 10 + origin.y()));
  }
  // Out-of-frame parts are zero-padded.
  Eigen::Vector2i origin;
  const ImagePatch edge = extract_cutout(frame, Vec2(5.0, 5.0), 64, &origin);
  CHECK(edge.at(0, 0) == 0.0f);
}

TEST_CASE("refiner none returns the coarse center unchanged") {
  const auto spec = eye_spec(112.0, 118.0);
  auto [frame, truth] = synth::synth_eye_frame(spec);
  PipelineConfig cfg = base_cfg();
  cfg.refiner = Refiner::none;
  const RefineResult res = refine(frame, Vec2(112.2, 118.4), cfg);
  CHECK(res.center == Vec2(112.2, 118.4));
  CHECK_FALSE(res.fallback);
}

TEST_CASE("radial-symmetry refinement lands near truth and honors the mask") {
  const auto spec = eye_spec(112.0, 117.6);
  auto [frame, truth] = synth::synth_eye_frame(spec);
  PipelineConfig cfg = base_cfg();
  cfg.refiner = Refiner::radial_symmetry;
  const CoarseResult coarse = coarse_detect(frame, cfg);
  REQUIRE(coarse.cr.has_value());
  const RefineResult res = refine(frame, *coarse.cr, cfg);
  CHECK_FALSE(res.fallback);
  CHECK((res.center - truth.cr_center).norm() < 0.1);

  // Content outside the mask radius must not influence the refinement.
  ImagePatch tampered = frame;
  for (int y = 0; y < 40; ++y)
    for (int x = 200; x < 240; ++x) tampered.at(x, y) = 1.0f;
  const RefineResult res2 = refine(tampered, *coarse.cr, cfg);
  CHECK(res2.center.x() == doctest::Approx(res.center.x()).epsilon(1e-12));
  CHECK(res2.center.y() == doctest::Approx(res.center.y()).epsilon(1e-12));
}

TEST_CASE("refiner failure falls back to the coarse center with a flag") {
  // All-black frame: the masked cutout is constant, so the gradient field
  // vanishes and radial symmetry reports no center.
  const ImagePatch black(240, 240);
  PipelineConfig cfg = base_cfg();
  cfg.refiner = Refiner::radial_symmetry;
  const RefineResult res = refine(black, Vec2(120.0, 120.0), cfg);
  CHECK(res.fallback);
  CHECK(res.center == Vec2(120.0, 120.0));
}

TEST_CASE("downsample2 is a box average with requantization") {
  ImagePatch img(4, 2);
  const int levels[2][4] = {{0, 2, 10, 20}, {4, 6, 30, 40}};
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<float>(levels[y][x]) / 255.0f;
  const ImagePatch half = downsample2(img);
  CHECK(half.width() == 2);
  CHECK(half.height() == 1);
  CHECK(half.level(0, 0) == 3);   // (0+2+4+6)/4
  CHECK(half.level(1, 0) == 25);  // (10+20+30+40)/4

  ImagePatch flat(6, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) flat.at(x, y) = 77.0f / 255.0f;
  const ImagePatch htoo = downsample2(flat);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) CHECK(htoo.level(x, y) == 77);

  // Odd trailing column is cropped.
  const ImagePatch odd = downsample2(ImagePatch(5, 4));
  CHECK(odd.width() == 2);
  CHECK(odd.height() == 2);
}

TEST_CASE("process_sequence is stateless and preserves frame order") {
  std::vector<ImagePatch> frames;
  std::vector<Vec2> truths;
  for (int i = 0; i < 6; ++i) {
    auto [frame, truth] = synth::synth_eye_frame(eye_spec(110.0 + i, 118.0, 4.0, 100 + i));
    frames.push_back(frame);
    truths.push_back(truth.cr_center);
  }
  PipelineConfig cfg = base_cfg();
  const auto res = process_sequence(frames, cfg, 2);
  REQUIRE(res.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(res[i].frame_index == i);
    REQUIRE(res[i].cr_threshold.has_value());
    CHECK((*res[i].cr_threshold - truths[i]).norm() < 0.5);
  }
  // Permuting the input permutes the outputs identically.
  std::vector<ImagePatch> reversed(frames.rbegin(), frames.rend());
  const auto res_rev = process_sequence(reversed, cfg, 1);
  for (int i = 0; i < 6; ++i) {
    REQUIRE(res_rev[5 - i].cr_threshold.has_value());
    CHECK(*res_rev[5 - i].cr_threshold == *res[i].cr_threshold);
  }
  CHECK(process_sequence(std::vector<ImagePatch>{}, cfg).empty());
}

TEST_CASE("full- and half-resolution runs agree within one pixel") {
  auto [frame, truth] = synth::synth_eye_frame(eye_spec(112.3, 117.8));
  PipelineConfig cfg = base_cfg();
  cfg.refiner = Refiner::radial_symmetry;
  cfg.pupil_blob.min_area = 50.0;  // pupil shrinks 4x at half resolution

  const auto full = process_sequence(std::vector<ImagePatch>{frame}, cfg);
  cfg.downsample = 2;
  const auto half = process_sequence(std::vector<ImagePatch>{frame}, cfg);
  REQUIRE(full[0].cr_threshold.has_value());
  REQUIRE(half[0].cr_threshold.has_value());
  CHECK((*full[0].cr_threshold - *half[0].cr_threshold).norm() < 1.0);
  REQUIRE(full[0].cr_refined.has_value());
  REQUIRE(half[0].cr_refined.has_value());
  CHECK((*full[0].cr_refined - *half[0].cr_refined).norm() < 1.0);
  // Everything is reported in full-resolution pixels.
  CHECK((*half[0].cr_refined - truth.cr_center).norm() < 1.0);
}

TEST_CASE("threshold scan separates workable thresholds from bad ones") {
  std::vector<ImagePatch> frames;
  for (int i = 0; i < 10; ++i)
    frames.push_back(synth::synth_eye_frame(eye_spec(112.0, 118.0, 8.0, 300 + i)).first);
  // 0.5 sits below the sclera level, so the blob filter rejects everything;
  // the two workable candidates deliver clean precision numbers.
  const std::vector<double> candidates{0.5, 0.75, 0.9};
  const auto rows = scan_cr_thresholds(frames, base_cfg(), candidates);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].fail_count == 10);
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].fail_count == 0);
    CHECK(std::isfinite(rows[i].rms_s2s));
    CHECK(rows[i].rms_s2s < 1.0);
  }
}

TEST_CASE("configs are validated before use") {
  PipelineConfig cfg = base_cfg();
  cfg.mask_radius = 40.0;  // >= cutout/2
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_cfg();
  cfg.downsample = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_cfg();
  cfg.refiner = Refiner::cnn;  // no model attached
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

}  // TEST_SUITE
