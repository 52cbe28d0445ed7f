#include <gtest/gtest.h>

#include <filesystem>

#include "softwarp/fixture_io.hpp"
#include "softwarp/png_io.hpp"
#include "softwarp/serialize.hpp"
#include "softwarp/softwarp.hpp"

using namespace softwarp;
namespace fs = std::filesystem;

namespace {

ImageTensor byte_image(int h, int w, int c) {
  ImageTensor t(h, w, c);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<double>((i * 37) % 256) / 255.0;
  return t;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("softwarp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Png, RgbAndGrayRoundTripExactly) {
  for (int c : {1, 3}) {
    const auto img = byte_image(7, 9, c);
    const auto bytes = encode_png(img);
    ASSERT_GE(bytes.size(), 8u);
    EXPECT_EQ(bytes[1], 'P');
    EXPECT_EQ(decode_png(bytes), img);
  }
}

TEST(Png, QuantizesAndClamps) {
  const ImageTensor img(1, 3, 1, std::vector<double>{-0.5, 0.5, 2.0});
  const auto back = decode_png(encode_png(img));
  EXPECT_EQ(back.at(0, 0, 0), 0.0);
  EXPECT_EQ(back.at(0, 1, 0), 128.0 / 255.0);
  EXPECT_EQ(back.at(0, 2, 0), 1.0);
}

TEST(Png, ErrorsOnBadInput) {
  EXPECT_THROW(encode_png(ImageTensor(2, 2, 2)), ShapeError);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4};
  EXPECT_THROW(decode_png(junk), IoError);
  EXPECT_THROW(read_png("/nonexistent/softwarp.png"), IoError);
}

TEST(SegmentationPng, RoundTripAndLabelRange) {
  SegmentationMap m(5, 6);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) m.set(y, x, (y * 6 + x) % kNumLabels);
  EXPECT_EQ(decode_segmentation_png(encode_segmentation_png(m)), m);
  const auto too_big = encode_png(ImageTensor(1, 1, 1, 20.0 / 255.0));
  EXPECT_THROW(decode_segmentation_png(too_big), IoError);
  EXPECT_THROW(decode_segmentation_png(encode_png(byte_image(2, 2, 3))), IoError);
}

TEST(Json, PoseRoundTrip) {
  PoseKeypoints p;
  p[kNeck] = {1.25, -3.5, true};
  p[kLAnkle] = {100.0, 7.0, false};
  const auto back = pose_from_json(pose_to_json(p));
  for (int j = 0; j < kNumJoints; ++j) {
    EXPECT_EQ(back[j].x, p[j].x);
    EXPECT_EQ(back[j].y, p[j].y);
    EXPECT_EQ(back[j].visible, p[j].visible);
  }
  EXPECT_THROW(pose_from_json(Json::array({1, 2})), IoError);
}

TEST(Json, TransformsRoundTrip) {
  PartTransform t;
  t.label = 15;
  t.affine = {0.9, -0.1, 3.0, 0.2, 1.1, -4.5};
  const std::vector<Point2> d{{0, 0}, {0.01, 0}, {0, 0}, {0, -0.02}, {0, 0}, {0, 0}, {0.03, 0.01}, {0, 0}, {0, 0}};
  t.tps = fit_tps_grid(3, 3, d, 1e-3, NormalizedFrame{10, 20, 5, 6});
  t.landmark_residual = 0.125;
  PartTransform id;
  id.label = 4;
  id.tps = identity_tps();
  id.degenerate = true;
  const std::vector<PartTransform> ts{t, id};
  const auto back = transforms_from_json(Json::parse(transforms_to_json(ts).dump()));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].label, 15);
  EXPECT_EQ(back[0].affine, t.affine);
  EXPECT_EQ(back[0].landmark_residual, 0.125);
  ASSERT_TRUE(back[0].tps.frame.has_value());
  EXPECT_EQ(back[0].tps.frame->cx, 10.0);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(back[0].tps.target_displacements[i], d[i]);
  const Point2 probe{0.3, -0.7};
  EXPECT_NEAR(norm(back[0].tps.apply(probe) - t.tps.apply(probe)), 0.0, 1e-12);
  EXPECT_TRUE(back[1].degenerate);
  EXPECT_TRUE(is_identity_tps(back[1].tps));
  EXPECT_EQ(transforms_from_json(transform_to_json(t)).size(), 1u);
}

TEST(Json, ConfigRoundTripAndDefaults) {
  PipelineConfig cfg = PipelineConfig::for_canvas(128, 160);
  cfg.gate = GateMode::constant_gate(0.25);
  cfg.border = BorderMode::kClamp;
  cfg.weights.lambda_ph = 3.0;
  cfg.alphas = {1.0, 0.5};
  const auto back = config_from_json(Json::parse(config_to_json(cfg).dump()));
  EXPECT_EQ(back.height, 128);
  EXPECT_EQ(back.width, 160);
  EXPECT_EQ(back.parts, cfg.parts);
  EXPECT_EQ(back.gate.kind, GateMode::Kind::kConstant);
  EXPECT_EQ(back.gate.constant, 0.25);
  EXPECT_EQ(back.border, BorderMode::kClamp);
  EXPECT_EQ(back.weights.lambda_ph, 3.0);
  EXPECT_EQ(back.alphas, cfg.alphas);

  const auto small = config_from_json(Json{{"height", 96}, {"width", 96}});
  EXPECT_EQ(small.parts, default_parts(96));
  EXPECT_EQ(small.landmarks, PipelineConfig{}.landmarks);
  EXPECT_THROW(config_from_json(Json{{"height", -1}}), InvalidArgument);
  EXPECT_THROW(config_from_json(Json{{"height", "tall"}}), IoError);
}

TEST(FixtureIo, SaveLoadRoundTrip) {
  const auto cfg = PipelineConfig::for_canvas(128, 128);
  const auto f = make_fixture(6, cfg);
  const auto dir = scratch("fixture");
  save_fixture(dir, f);
  for (const char* name : {"condition.png", "condition_parsing.png", "target_parsing.png", "target.png", "fixture.json"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  const auto g = load_fixture(dir);
  EXPECT_EQ(g.seed, f.seed);
  EXPECT_EQ(g.condition_image, f.condition_image);  // texture samples are multiples of 1/255
  EXPECT_EQ(g.condition_parsing, f.condition_parsing);
  EXPECT_EQ(g.target_parsing, f.target_parsing);
  ASSERT_EQ(g.ground_truth.size(), f.ground_truth.size());
  for (std::size_t i = 0; i < f.ground_truth.size(); ++i) EXPECT_EQ(g.ground_truth[i].affine, f.ground_truth[i].affine);
  fs::remove_all(dir);
}

TEST(ReportJson, EvaluationHasExpectedShape) {
  const auto cfg = PipelineConfig::for_canvas(128, 128);
  const auto rep = evaluate({make_fixture(1, cfg)}, cfg);
  const Json j = evaluation_to_json(rep);
  ASSERT_TRUE(j.contains("fixtures"));
  ASSERT_TRUE(j.contains("aggregate"));
  EXPECT_EQ(j["fixtures"].size(), 1u);
  EXPECT_EQ(j["aggregate"]["ssim"].get<double>(), rep.aggregate.ssim);
  EXPECT_EQ(j["fixtures"][0]["losses"]["total"].get<double>(), rep.fixtures[0].total);
}
