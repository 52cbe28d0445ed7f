#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "softwarp/config.hpp"
#include "softwarp/point.hpp"
#include "softwarp/tensor.hpp"

namespace softwarp {

/// Distance from p to the closed segment [a, b].
inline double distance_to_segment(Point2 p, Point2 a, Point2 b) noexcept {
  const Point2 ab = b - a;
  const double len2 = squared_norm(ab);
  double t = len2 > 0.0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

/// Paints every configured part as a capsule of its half-width around the segment between
/// its two joints, in list order, over a background of label 0. Parts with an invisible
/// endpoint are skipped and their labels appended to `skipped`.
inline SegmentationMap rasterize_parsing(const PoseKeypoints& pose, const PipelineConfig& cfg, int height, int width,
                                         std::vector<int>* skipped = nullptr) {
  SegmentationMap seg(height, width);
  for (const auto& part : cfg.parts) {
    const Joint& ja = pose[part.joint_a];
    const Joint& jb = pose[part.joint_b];
    if (!ja.visible || !jb.visible) {
      if (skipped) skipped->push_back(part.label);
      continue;
    }
    const Point2 a{ja.x, ja.y};
    const Point2 b{jb.x, jb.y};
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - part.half_width)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + part.half_width)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - part.half_width)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + part.half_width)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (distance_to_segment({static_cast<double>(x), static_cast<double>(y)}, a, b) <= part.half_width) {
          seg.set(y, x, part.label);
        }
      }
    }
  }
  return seg;
}

inline SegmentationMap rasterize_parsing(const PoseKeypoints& pose, const PipelineConfig& cfg,
                                         std::vector<int>* skipped = nullptr) {
  return rasterize_parsing(pose, cfg, cfg.height, cfg.width, skipped);
}

}  // namespace softwarp
