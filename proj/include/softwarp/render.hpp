#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include "softwarp/config.hpp"
#include "softwarp/error.hpp"
#include "softwarp/metrics.hpp"
#include "softwarp/part_matching.hpp"
#include "softwarp/part_transform.hpp"
#include "softwarp/rasterize.hpp"
#include "softwarp/sampler.hpp"
#include "softwarp/tensor.hpp"
#include "softwarp/warp_grid.hpp"
#include "softwarp/warping_block.hpp"

namespace softwarp {

struct RenderInputs {
  ImageTensor condition_image;
  SegmentationMap condition_parsing;
  /// Rasterized into the target parsing unless `target_parsing` is given.
  std::optional<PoseKeypoints> target_pose;
  std::optional<SegmentationMap> target_parsing;
};

struct PartDiagnostic {
  int label = 0;
  PartTransform transform;
  /// IoU of the warped condition mask (thresholded at 0.5) against the target mask.
  double warped_iou = 0.0;
  std::size_t target_pixels = 0;
  /// Target pixels of this label that received no warped content (gate 0).
  std::size_t hole_pixels = 0;
  /// The label is in the target parsing but not in the condition; filled with the global mean.
  bool missing_in_condition = false;
};

struct RenderResult {
  ImageTensor image;
  SegmentationMap parsing;
  std::vector<PartDiagnostic> parts;
  /// Labels present in exactly one of the two parsings.
  std::vector<int> omitted_labels;
  /// Configured parts the rasterizer skipped because a joint was invisible.
  std::vector<int> skipped_parts;
};

inline PartTransformOptions transform_options(const PipelineConfig& cfg) {
  PartTransformOptions o;
  o.tps_rows = cfg.tps_rows;
  o.tps_cols = cfg.tps_cols;
  o.tps_regularization = cfg.tps_regularization;
  return o;
}

inline bool is_identity_tps(const TpsParams& t) noexcept {
  return t.affine_part == AffineParams::identity() &&
         std::all_of(t.kernel_weights.begin(), t.kernel_weights.end(), [](Point2 w) { return w == Point2{}; });
}

/// Backward-warp grid realizing "affine, then TPS" for one part: p -> affine^-1(tps(p)).
inline WarpGrid part_grid(const PartTransform& t, int height, int width) {
  const WarpGrid inverse_affine = affine_grid(t.affine.inverse(), height, width);
  if (is_identity_tps(t.tps)) return inverse_affine;
  return compose_grids(inverse_affine, tps_grid(t.tps, height, width));
}

namespace detail {

inline std::vector<double> mean_color(const ImageTensor& image, const SegmentationMap* seg, int label) {
  const int c = image.channels();
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(c));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (seg && seg->at(y, x) != label) continue;
      for (int k = 0; k < c; ++k) samples[static_cast<std::size_t>(k)].push_back(image.at(y, x, k));
    }
  }
  std::vector<double> out(static_cast<std::size_t>(c), 0.0);
  for (int k = 0; k < c; ++k) {
    const auto& s = samples[static_cast<std::size_t>(k)];
    if (!s.empty()) out[static_cast<std::size_t>(k)] = pairwise_sum(s) / static_cast<double>(s.size());
  }
  return out;
}

}  // namespace detail

/// Region-wise rendering with given per-part transforms (labels without a transform use the
/// identity for background and the global mean color otherwise).
///
/// For each target label: the base canvas is the part's mean condition color m, the residual
/// is condition - m, and warping_block adds the gated, warped residual. The gate is the
/// warped condition mask times the target mask (or a constant). Output pixels take the value
/// of the block belonging to their target label.
inline RenderResult render_with_transforms(const ImageTensor& condition, const SegmentationMap& condition_parsing,
                                           const SegmentationMap& target_parsing,
                                           const std::vector<PartTransform>& transforms, const PipelineConfig& cfg) {
  const int h = condition.height();
  const int w = condition.width();
  const int ch = condition.channels();
  if (condition_parsing.height() != h || condition_parsing.width() != w || !condition_parsing.same_shape(target_parsing)) {
    throw ShapeError("render: image and parsings must share dimensions");
  }

  RenderResult result;
  result.parsing = target_parsing;
  result.image = ImageTensor(h, w, ch);
  const auto global_mean = detail::mean_color(condition, nullptr, 0);

  std::array<bool, kNumLabels> in_cond{};
  std::array<bool, kNumLabels> in_target{};
  for (auto l : condition_parsing.labels()) in_cond[l] = true;
  for (auto l : target_parsing.labels()) in_target[l] = true;
  for (int l = 0; l < kNumLabels; ++l) {
    if (in_cond[l] != in_target[l]) result.omitted_labels.push_back(l);
  }

  for (int label = 0; label < kNumLabels; ++label) {
    if (!in_target[label]) continue;
    PartDiagnostic diag;
    diag.label = label;
    diag.target_pixels = target_parsing.count(label);
    const auto found = std::find_if(transforms.begin(), transforms.end(),
                                    [&](const PartTransform& t) { return t.label == label; });
    if (found != transforms.end()) {
      diag.transform = *found;
    } else {
      diag.transform.label = label;
      diag.transform.tps = identity_tps(cfg.tps_rows, cfg.tps_cols);
    }

    if (!in_cond[label] || (found == transforms.end() && label != 0)) {
      diag.missing_in_condition = !in_cond[label];
      diag.hole_pixels = diag.target_pixels;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (target_parsing.at(y, x) != label) continue;
          for (int k = 0; k < ch; ++k) result.image.at(y, x, k) = global_mean[static_cast<std::size_t>(k)];
        }
      }
      result.parts.push_back(std::move(diag));
      continue;
    }

    const WarpGrid grid = part_grid(diag.transform, h, w);
    const auto m = detail::mean_color(condition, &condition_parsing, label);
    ImageTensor base(h, w, ch);
    ImageTensor residual(h, w, ch);
    for (std::size_t i = 0; i < condition.size(); ++i) {
      const double mk = m[i % static_cast<std::size_t>(ch)];
      base.data()[i] = mk;
      residual.data()[i] = condition.data()[i] - mk;
    }
    const ImageTensor target_mask = target_parsing.mask(label);
    ImageTensor warped_mask = bilinear_sample(condition_parsing.mask(label), grid, BorderMode::kZeros);
    for (double& v : warped_mask.data()) v = std::clamp(v, 0.0, 1.0);  // bilinear weights may sum to 1 + ulp
    diag.warped_iou = mask_iou(warped_mask, target_mask);
    const GateMap gate = cfg.gate.kind == GateMode::Kind::kOverlap
                             ? gate_from_overlap(warped_mask, target_mask)
                             : GateMap::constant(h, w, cfg.gate.constant);
    const ImageTensor block = warping_block(base, residual, grid, gate, cfg.border);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (target_parsing.at(y, x) != label) continue;
        if (gate.at(y, x, 0) == 0.0) ++diag.hole_pixels;
        for (int k = 0; k < ch; ++k) result.image.at(y, x, k) = block.at(y, x, k);
      }
    }
    result.parts.push_back(std::move(diag));
  }
  return result;
}

/// Per-part transform estimates for every label except background.
inline std::vector<PartTransform> estimate_transforms(const PartMatching& matching, const PipelineConfig& cfg) {
  std::vector<PartTransform> out;
  const auto opts = transform_options(cfg);
  for (const auto& c : matching.parts) {
    if (c.label == 0) continue;
    out.push_back(estimate_part_transform(c, opts));
  }
  return out;
}

/// Full pipeline: target parsing (rasterized or supplied), part matching, per-part
/// transform estimation, gated warping and region-wise compositing.
inline RenderResult render(const RenderInputs& in, const PipelineConfig& cfg) {
  cfg.validate();
  const int h = in.condition_image.height();
  const int w = in.condition_image.width();
  std::vector<int> skipped;
  SegmentationMap target;
  if (in.target_parsing) {
    target = *in.target_parsing;
  } else if (in.target_pose) {
    target = rasterize_parsing(*in.target_pose, cfg, h, w, &skipped);
  } else {
    throw InvalidArgument("render: need a target pose or a target parsing");
  }
  const PartMatching matching = match_parts(in.condition_parsing, target, cfg.landmarks);
  auto result = render_with_transforms(in.condition_image, in.condition_parsing, target,
                                       estimate_transforms(matching, cfg), cfg);
  result.skipped_parts = std::move(skipped);
  return result;
}

}  // namespace softwarp
