#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "softwarp/affine.hpp"
#include "softwarp/error.hpp"
#include "softwarp/point.hpp"
#include "softwarp/tensor.hpp"
#include "softwarp/tps.hpp"

namespace softwarp {

/// Symmetric 2x2 second central moment matrix [[xx, xy], [xy, yy]].
struct Moments2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double determinant() const noexcept { return xx * yy - xy * xy; }
  double trace() const noexcept { return xx + yy; }

  friend bool operator==(const Moments2&, const Moments2&) = default;
};

/// Per-part statistics of the same label in two segmentation maps.
struct PartCorrespondence {
  int label = 0;
  std::size_t source_area = 0;
  std::size_t target_area = 0;
  Point2 source_centroid;
  Point2 target_centroid;
  Moments2 source_moments;
  Moments2 target_moments;
  /// Boundary landmarks, pair k taken at the same arc-length fraction in both parts.
  std::vector<PointPair> landmark_pairs;
};

struct PartMatching {
  std::vector<PartCorrespondence> parts;
  /// Labels present in exactly one of the two maps.
  std::vector<int> omitted_labels;
};

inline constexpr int kDefaultLandmarks = 16;

namespace detail {

// 8-neighbourhood in clockwise screen order (y grows downwards), starting west.
inline constexpr std::array<std::array<int, 2>, 8> kMoore = {
    {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

struct PixelRegion {
  std::size_t area = 0;
  Point2 centroid;
  Moments2 moments;
  std::vector<Point2> contour;
};

// Largest 8-connected component of `label`; ties resolved by raster order of the first pixel.
inline std::vector<std::uint8_t> largest_component(const SegmentationMap& seg, int label) {
  const int h = seg.height();
  const int w = seg.width();
  std::vector<int> comp(static_cast<std::size_t>(h) * w, -1);
  std::vector<std::size_t> sizes;
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (seg.labels()[static_cast<std::size_t>(start)] != label || comp[static_cast<std::size_t>(start)] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    sizes.push_back(0);
    comp[static_cast<std::size_t>(start)] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      ++sizes.back();
      const int cy = cur / w;
      const int cx = cur % w;
      for (const auto& d : kMoore) {
        const int nx = cx + d[0];
        const int ny = cy + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const auto ni = static_cast<std::size_t>(ny) * w + nx;
        if (seg.labels()[ni] != label || comp[ni] >= 0) continue;
        comp[ni] = id;
        stack.push_back(static_cast<int>(ni));
      }
    }
  }
  std::vector<std::uint8_t> mask(comp.size(), 0);
  if (sizes.empty()) return mask;
  const auto best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t i = 0; i < comp.size(); ++i) mask[i] = comp[i] == best ? 1 : 0;
  return mask;
}

// Moore-neighbour tracing of the outer boundary; returns boundary pixel centres in clockwise
// screen order starting from the top-left pixel of the component.
inline std::vector<Point2> trace_outer_contour(const std::vector<std::uint8_t>& mask, int h, int w) {
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && mask[static_cast<std::size_t>(y) * w + x] != 0;
  };
  int sx = -1;
  int sy = -1;
  for (int i = 0; i < h * w && sx < 0; ++i) {
    if (mask[static_cast<std::size_t>(i)]) {
      sx = i % w;
      sy = i / w;
    }
  }
  std::vector<Point2> contour;
  if (sx < 0) return contour;
  contour.push_back({static_cast<double>(sx), static_cast<double>(sy)});

  // Finds the next boundary pixel scanning clockwise from the backtrack direction.
  auto step = [&](int x, int y, int back, int& nx, int& ny, int& nback) {
    for (int i = 1; i <= 8; ++i) {
      const int d = (back + i) % 8;
      const int cx = x + kMoore[static_cast<std::size_t>(d)][0];
      const int cy = y + kMoore[static_cast<std::size_t>(d)][1];
      if (inside(cx, cy)) {
        const int prev = (back + i - 1) % 8;
        const int bx = x + kMoore[static_cast<std::size_t>(prev)][0] - cx;
        const int by = y + kMoore[static_cast<std::size_t>(prev)][1] - cy;
        nback = 0;
        for (int k = 0; k < 8; ++k) {
          if (kMoore[static_cast<std::size_t>(k)][0] == bx && kMoore[static_cast<std::size_t>(k)][1] == by) nback = k;
        }
        nx = cx;
        ny = cy;
        return true;
      }
    }
    return false;
  };

  int x = sx, y = sy, back = 0;
  int fx = 0, fy = 0, fback = 0;
  if (!step(x, y, back, fx, fy, fback)) return contour;  // isolated pixel
  x = fx;
  y = fy;
  back = fback;
  const std::size_t limit = 4 * static_cast<std::size_t>(h) * w + 8;
  while (contour.size() < limit) {
    contour.push_back({static_cast<double>(x), static_cast<double>(y)});
    int nx = 0, ny = 0, nback = 0;
    step(x, y, back, nx, ny, nback);
    if (x == sx && y == sy && nx == fx && ny == fy) {
      contour.pop_back();  // start pixel already recorded
      break;
    }
    x = nx;
    y = ny;
    back = nback;
  }
  return contour;
}

inline PixelRegion region_stats(const SegmentationMap& seg, int label) {
  PixelRegion r;
  double sx = 0.0;
  double sy = 0.0;
  for (int y = 0; y < seg.height(); ++y) {
    for (int x = 0; x < seg.width(); ++x) {
      if (seg.at(y, x) != label) continue;
      ++r.area;
      sx += x;
      sy += y;
    }
  }
  if (r.area == 0) return r;
  const double n = static_cast<double>(r.area);
  r.centroid = {sx / n, sy / n};
  double mxx = 0.0, mxy = 0.0, myy = 0.0;
  for (int y = 0; y < seg.height(); ++y) {
    for (int x = 0; x < seg.width(); ++x) {
      if (seg.at(y, x) != label) continue;
      const double dx = x - r.centroid.x;
      const double dy = y - r.centroid.y;
      mxx += dx * dx;
      mxy += dx * dy;
      myy += dy * dy;
    }
  }
  // Pixels are unit squares: each contributes 1/12 of extra variance along both axes.
  r.moments = {mxx / n + 1.0 / 12.0, mxy / n, myy / n + 1.0 / 12.0};
  r.contour = trace_outer_contour(largest_component(seg, label), seg.height(), seg.width());
  return r;
}

// K points at equal arc-length fractions along the closed contour, starting where the
// horizontal ray from `center` towards +x leaves the contour.
inline std::vector<Point2> sample_landmarks(const std::vector<Point2>& contour, Point2 center, int k) {
  std::vector<Point2> out;
  if (contour.empty() || k <= 0) return out;
  const std::size_t m = contour.size();
  if (m == 1) return std::vector<Point2>(static_cast<std::size_t>(k), contour.front());

  std::size_t start_edge = 0;
  double start_t = 0.0;
  double best_x = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const Point2 a = contour[i];
    const Point2 b = contour[(i + 1) % m];
    if ((a.y - center.y) * (b.y - center.y) > 0.0) continue;
    double t = 0.0;
    if (a.y != b.y) {
      t = (center.y - a.y) / (b.y - a.y);
    } else if (a.y != center.y) {
      continue;
    } else {
      t = a.x >= b.x ? 0.0 : 1.0;
    }
    const double x = a.x + t * (b.x - a.x);
    if (x >= center.x && x > best_x) {
      best_x = x;
      start_edge = i;
      start_t = t;
    }
  }
  if (!std::isfinite(best_x)) {
    // Contour does not cross the ray: start at the vertex closest in angle to it.
    double best_angle = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double a = std::abs(std::atan2(contour[i].y - center.y, contour[i].x - center.x));
      if (a < best_angle) {
        best_angle = a;
        start_edge = i;
      }
    }
    start_t = 0.0;
  }

  // Re-walk the polygon from the start point.
  std::vector<double> lengths(m);
  double perimeter = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    lengths[i] = norm(contour[(i + 1) % m] - contour[i]);
    perimeter += lengths[i];
  }
  const Point2 a0 = contour[start_edge];
  const Point2 b0 = contour[(start_edge + 1) % m];
  const Point2 start = a0 + start_t * (b0 - a0);
  if (!(perimeter > 0.0)) return std::vector<Point2>(static_cast<std::size_t>(k), start);

  std::size_t edge = start_edge;
  double pos_in_edge = start_t * lengths[edge];  // arc length already consumed on `edge`
  double walked = 0.0;
  for (int j = 0; j < k; ++j) {
    const double want = perimeter * j / k;
    while (walked + (lengths[edge] - pos_in_edge) < want) {
      walked += lengths[edge] - pos_in_edge;
      edge = (edge + 1) % m;
      pos_in_edge = 0.0;
    }
    const double s = pos_in_edge + (want - walked);
    const Point2 a = contour[edge];
    const Point2 b = contour[(edge + 1) % m];
    const double t = lengths[edge] > 0.0 ? s / lengths[edge] : 0.0;
    out.push_back(a + t * (b - a));
  }
  return out;
}

}  // namespace detail

/// Per-label statistics for every label present in both maps; labels present in only
/// one map are listed in `omitted_labels`.
inline PartMatching match_parts(const SegmentationMap& condition, const SegmentationMap& target,
                                int landmarks = kDefaultLandmarks) {
  if (!condition.same_shape(target)) throw ShapeError("match_parts: map dimensions differ");
  if (landmarks <= 0) throw InvalidArgument("match_parts: landmark count must be positive");
  std::array<bool, kNumLabels> in_cond{};
  std::array<bool, kNumLabels> in_target{};
  for (auto l : condition.labels()) in_cond[l] = true;
  for (auto l : target.labels()) in_target[l] = true;

  PartMatching result;
  for (int label = 0; label < kNumLabels; ++label) {
    if (in_cond[label] != in_target[label]) {
      result.omitted_labels.push_back(label);
      continue;
    }
    if (!in_cond[label]) continue;
    const auto src = detail::region_stats(condition, label);
    const auto dst = detail::region_stats(target, label);
    PartCorrespondence c;
    c.label = label;
    c.source_area = src.area;
    c.target_area = dst.area;
    c.source_centroid = src.centroid;
    c.target_centroid = dst.centroid;
    c.source_moments = src.moments;
    c.target_moments = dst.moments;
    const auto ls = detail::sample_landmarks(src.contour, src.centroid, landmarks);
    const auto lt = detail::sample_landmarks(dst.contour, dst.centroid, landmarks);
    for (std::size_t k = 0; k < ls.size(); ++k) c.landmark_pairs.push_back({ls[k], lt[k]});
    result.parts.push_back(std::move(c));
  }
  return result;
}

}  // namespace softwarp
