#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "softwarp/config.hpp"
#include "softwarp/error.hpp"
#include "softwarp/fixture.hpp"
#include "softwarp/losses.hpp"
#include "softwarp/metrics.hpp"
#include "softwarp/render.hpp"

namespace softwarp {

struct PartError {
  int label = 0;
  double rotation_error_deg = 0.0;
  /// Distance between the estimated and true images of the condition part's centroid.
  double translation_error_px = 0.0;
  double warped_iou = 0.0;
};

struct FixtureReport {
  std::uint64_t seed = 0;
  double ssim = 0.0;
  /// Mean over rendered parts of IoU(warped condition mask, target mask).
  double mean_iou = 0.0;
  double adversarial = 0.0;
  double pixel = 0.0;
  double perceptual = 0.0;
  double pyramid = 0.0;
  double total = 0.0;
  double max_rotation_error_deg = 0.0;
  double max_translation_error_px = 0.0;
  std::vector<PartError> parts;
};

struct EvaluationReport {
  std::vector<FixtureReport> fixtures;
  /// Means over fixtures of the scalar columns; error columns hold the maximum.
  FixtureReport aggregate;
};

/// Probability fed to the generator-side adversarial term in place of a trained
/// discriminator: (1 + ssim) / 2, kept strictly inside (0, 1).
inline double surrogate_fake_score(double ssim_value) noexcept {
  return std::clamp(0.5 * (1.0 + ssim_value), 1e-6, 1.0 - 1e-6);
}

namespace detail {

inline Point2 label_centroid(const SegmentationMap& seg, int label) {
  std::vector<double> xs, ys;
  for (int y = 0; y < seg.height(); ++y) {
    for (int x = 0; x < seg.width(); ++x) {
      if (seg.at(y, x) != label) continue;
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  if (xs.empty()) return {};
  return {pairwise_sum(xs) / static_cast<double>(xs.size()), pairwise_sum(ys) / static_cast<double>(ys.size())};
}

inline double mean_of(const std::vector<double>& v) { return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size()); }

}  // namespace detail

/// Angle between two rotation estimates, in degrees, folded into [0, 180].
inline double rotation_difference_deg(const AffineParams& a, const AffineParams& b) noexcept {
  const double d = detail::wrap_angle(a.rotation_angle() - b.rotation_angle());
  return std::abs(d) * 180.0 / std::numbers::pi;
}

inline FixtureReport evaluate_fixture(const SynthFixture& f, const PipelineConfig& cfg) {
  RenderInputs in{f.condition_image, f.condition_parsing, f.target_pose, std::nullopt};
  const RenderResult r = render(in, cfg);

  FixtureReport rep;
  rep.seed = f.seed;
  rep.ssim = ssim(r.image, f.target_image);
  rep.pixel = pixel_loss(r.image, f.target_image);
  rep.perceptual = perceptual_loss(r.image, f.target_image, PyramidExtractor(cfg.perceptual_alphas));
  rep.pyramid = pyramid_loss(r.image, f.target_image, PyramidExtractor(cfg.alphas));
  const double fake = surrogate_fake_score(rep.ssim);
  rep.adversarial = adversarial_loss({}, std::span<const double>(&fake, 1), AdversarialSide::kGenerator);
  rep.total = total_loss(rep.adversarial, rep.pixel, rep.perceptual, rep.pyramid, cfg.weights);

  std::vector<double> ious;
  for (const auto& d : r.parts) {
    if (d.label == 0 || d.missing_in_condition) continue;
    PartError e;
    e.label = d.label;
    e.warped_iou = d.warped_iou;
    ious.push_back(d.warped_iou);
    const auto gt = std::find_if(f.ground_truth.begin(), f.ground_truth.end(),
                                 [&](const PartTransform& t) { return t.label == d.label; });
    if (gt != f.ground_truth.end()) {
      e.rotation_error_deg = rotation_difference_deg(d.transform.affine, gt->affine);
      const Point2 c = detail::label_centroid(f.condition_parsing, d.label);
      e.translation_error_px = norm(d.transform.affine.apply(c) - gt->affine.apply(c));
    }
    rep.max_rotation_error_deg = std::max(rep.max_rotation_error_deg, e.rotation_error_deg);
    rep.max_translation_error_px = std::max(rep.max_translation_error_px, e.translation_error_px);
    rep.parts.push_back(e);
  }
  rep.mean_iou = ious.empty() ? 1.0 : detail::mean_of(ious);
  return rep;
}

inline EvaluationReport evaluate(const std::vector<SynthFixture>& fixtures, const PipelineConfig& cfg) {
  if (fixtures.empty()) throw InvalidArgument("evaluate: empty fixture set");
  EvaluationReport out;
  for (const auto& f : fixtures) out.fixtures.push_back(evaluate_fixture(f, cfg));

  auto column = [&](double FixtureReport::*m) {
    std::vector<double> v;
    for (const auto& r : out.fixtures) v.push_back(r.*m);
    return v;
  };
  auto& a = out.aggregate;
  a.ssim = detail::mean_of(column(&FixtureReport::ssim));
  a.mean_iou = detail::mean_of(column(&FixtureReport::mean_iou));
  a.adversarial = detail::mean_of(column(&FixtureReport::adversarial));
  a.pixel = detail::mean_of(column(&FixtureReport::pixel));
  a.perceptual = detail::mean_of(column(&FixtureReport::perceptual));
  a.pyramid = detail::mean_of(column(&FixtureReport::pyramid));
  a.total = detail::mean_of(column(&FixtureReport::total));
  for (const auto& r : out.fixtures) {
    a.max_rotation_error_deg = std::max(a.max_rotation_error_deg, r.max_rotation_error_deg);
    a.max_translation_error_px = std::max(a.max_translation_error_px, r.max_translation_error_px);
  }
  return out;
}

}  // namespace softwarp
