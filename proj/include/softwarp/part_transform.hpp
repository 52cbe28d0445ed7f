#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "softwarp/affine.hpp"
#include "softwarp/error.hpp"
#include "softwarp/part_matching.hpp"
#include "softwarp/point.hpp"
#include "softwarp/tps.hpp"

namespace softwarp {

struct PartTransformOptions {
  int tps_rows = 3;
  int tps_cols = 3;
  double tps_regularization = 1e-3;
  /// Rotation candidates scanned over the full circle before local refinement.
  int angle_steps = 360;
  /// Pixel margin added around the target part when framing its TPS control grid.
  double frame_margin = 2.0;
  /// Parts whose moment eigenvalue ratio reaches this on both sides take their rotation
  /// from the principal axes; rounder parts use the full scan.
  double axis_ratio = 1.2;
  /// Ridge weight on the grid node displacements when fitting the landmark residuals.
  double grid_ridge = 1e-2;
};

/// Affine stage followed by the TPS refinement for one part.
///
/// `affine` maps condition-part coordinates onto target-part coordinates. `tps` maps a
/// target pixel to its position in the affinely warped condition image, so sampling the
/// condition image at affine.inverse()(tps(p)) realizes "affine, then TPS".
struct PartTransform {
  int label = 0;
  AffineParams affine;
  TpsParams tps;
  /// Mean squared landmark residual (pixels^2) after the affine stage.
  double landmark_residual = 0.0;
  /// Set when either side of the correspondence has zero area; transforms are identity.
  bool degenerate = false;
};

namespace detail {

struct Mat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;  // [[a, b], [c, d]]

  Mat2 operator*(const Mat2& o) const noexcept {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Point2 operator*(Point2 p) const noexcept { return {a * p.x + b * p.y, c * p.x + d * p.y}; }
};

// Principal square root of a symmetric positive definite 2x2 matrix (closed form).
inline Mat2 spd_sqrt(const Moments2& m) {
  const double det = m.determinant();
  if (!(det > 0.0) || !(m.trace() > 0.0)) {
    throw InvalidArgument("estimate_part_transform: moment matrix is not positive definite");
  }
  const double s = std::sqrt(det);
  const double t = std::sqrt(m.trace() + 2.0 * s);
  return {(m.xx + s) / t, m.xy / t, m.xy / t, (m.yy + s) / t};
}

inline Mat2 inverse(const Mat2& m) noexcept {
  const double det = m.a * m.d - m.b * m.c;
  return {m.d / det, -m.b / det, -m.c / det, m.a / det};
}

inline Mat2 rotation(double theta) noexcept {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c, -s, s, c};
}

struct AngleCost {
  double cost = 0.0;
  int shift = 0;
};

// Mean squared distance between mapped source landmarks and target landmarks, minimized
// over cyclic index shifts (the two contours may start at different boundary points).
inline AngleCost landmark_cost(const Mat2& linear, const std::vector<Point2>& src,
                               const std::vector<Point2>& dst) {
  const std::size_t k = src.size();
  std::vector<Point2> mapped(k);
  for (std::size_t i = 0; i < k; ++i) mapped[i] = linear * src[i];
  AngleCost best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t shift = 0; shift < k; ++shift) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += squared_norm(mapped[i] - dst[(i + shift) % k]);
    const double cost = sum / static_cast<double>(k);
    if (cost < best.cost) best = {cost, static_cast<int>(shift)};
  }
  return best;
}

inline double wrap_angle(double a) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

// Square frame around the points with a pixel margin.
inline NormalizedFrame frame_around(const std::vector<Point2>& pts, double margin) {
  double x0 = pts.front().x, x1 = x0, y0 = pts.front().y, y1 = y0;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double half = 0.5 * std::max(x1 - x0, y1 - y0) + margin;
  const double s = std::max(half, 1.0);
  return {0.5 * (x0 + x1), 0.5 * (y0 + y1), s, s};
}

struct Axes {
  double angle = 0.0;  // direction of the major axis
  double ratio = 1.0;  // major / minor eigenvalue
};

inline Axes principal_axes(const Moments2& m) noexcept {
  const double half_diff = 0.5 * (m.xx - m.yy);
  const double r = std::hypot(half_diff, m.xy);
  const double mean = 0.5 * m.trace();
  const double minor = mean - r;
  return {0.5 * std::atan2(2.0 * m.xy, m.xx - m.yy), minor > 0.0 ? (mean + r) / minor : std::numeric_limits<double>::infinity()};
}

// Among candidates whose landmark cost is within tolerance of the best, the smallest rotation
// wins; symmetric parts are matched equally well by several rotations.
template <class LinearFor>
double pick_rotation(const std::vector<double>& candidates, const LinearFor& linear_for, const std::vector<Point2>& src,
                     const std::vector<Point2>& dst, double& residual) {
  std::vector<double> costs;
  for (double t : candidates) costs.push_back(landmark_cost(linear_for(t), src, dst).cost);
  const double best = *std::min_element(costs.begin(), costs.end());
  const double tolerance = 0.5 + 0.25 * best;
  std::size_t chosen = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (costs[i] > best + tolerance) continue;
    if (chosen == candidates.size() || std::abs(candidates[i]) < std::abs(candidates[chosen])) chosen = i;
  }
  residual = costs[chosen];
  return candidates[chosen];
}

// Full-circle scan for parts without a dominant axis, then golden-section refinement.
template <class LinearFor>
double scan_rotation(double step, int steps, const LinearFor& linear_for, const std::vector<Point2>& src,
                     const std::vector<Point2>& dst, double& residual) {
  steps = std::max(steps, 4);
  std::vector<double> costs(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) costs[static_cast<std::size_t>(i)] = landmark_cost(linear_for(i * step), src, dst).cost;
  auto cost_at = [&](int i) { return costs[static_cast<std::size_t>(((i % steps) + steps) % steps)]; };

  // One representative per basin, so ripples next to the true angle cannot win the tie-break.
  const int basin = std::max(1, steps / 12);
  std::vector<double> candidates;
  for (int i = 0; i < steps; ++i) {
    bool dominated = false;
    for (int d = -basin; d <= basin && !dominated; ++d) {
      if (d == 0) continue;
      const double cj = cost_at(i + d);
      dominated = cj < cost_at(i) || (cj == cost_at(i) && d < 0);
    }
    if (!dominated) candidates.push_back(wrap_angle(i * step));
  }
  double theta = pick_rotation(candidates, linear_for, src, dst, residual);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = theta - step;
  double hi = theta + step;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = landmark_cost(linear_for(x1), src, dst).cost;
  double f2 = landmark_cost(linear_for(x2), src, dst).cost;
  for (int it = 0; it < 60; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = landmark_cost(linear_for(x1), src, dst).cost;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = landmark_cost(linear_for(x2), src, dst).cost;
    }
  }
  const double refined = f1 <= f2 ? x1 : x2;
  const double refined_cost = std::min(f1, f2);
  if (refined_cost < residual) {
    theta = refined;
    residual = refined_cost;
  }
  return theta;
}

// Node displacements of a rows x cols grid spline that best reproduce the landmark moves
// from -> to in least squares. The spline is linear in its node displacements, so each
// column of the design matrix is the spline of one unit node displacement. The ridge term
// keeps nodes that no landmark constrains at rest.
inline std::vector<Point2> fit_grid_displacements(int rows, int cols, double lambda, double ridge,
                                                  const std::vector<Point2>& from, const std::vector<Point2>& to) {
  const std::size_t m = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  std::vector<Point2> out(m);
  if (from.empty()) return out;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(from.size()), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<Point2> unit(m);
    unit[j] = {1.0, 0.0};
    const TpsParams basis = fit_tps_grid(rows, cols, unit, lambda);
    for (std::size_t i = 0; i < from.size(); ++i) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = basis.apply(from[i]).x - from[i].x;
    }
  }
  Eigen::MatrixXd rhs(static_cast<Eigen::Index>(from.size()), 2);
  for (std::size_t i = 0; i < from.size(); ++i) {
    rhs(static_cast<Eigen::Index>(i), 0) = to[i].x - from[i].x;
    rhs(static_cast<Eigen::Index>(i), 1) = to[i].y - from[i].y;
  }
  Eigen::MatrixXd normal = design.transpose() * design;
  normal.diagonal().array() += ridge;
  const Eigen::MatrixXd sol = normal.ldlt().solve(design.transpose() * rhs);
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = {sol(static_cast<Eigen::Index>(j), 0), sol(static_cast<Eigen::Index>(j), 1)};
  }
  return out;
}

}  // namespace detail

/// Closed-form affine + TPS estimate for one part correspondence.
///
/// Translation comes from the centroids. The linear part is T^(1/2) R(theta) S^(-1/2) with
/// S, T the source and target moment matrices, which reproduces the target moments for every
/// rotation theta; theta is chosen by minimizing the landmark residual (preferring the
/// smallest rotation among near-equal minima, which resolves symmetric parts). The TPS is
/// then fitted to the landmark residuals left by the affine stage and expressed on a
/// control grid framed around the target part.
inline PartTransform estimate_part_transform(const PartCorrespondence& c,
                                             const PartTransformOptions& opts = {}) {
  PartTransform out;
  out.label = c.label;
  if (c.source_area == 0 || c.target_area == 0) {
    out.degenerate = true;
    out.tps = identity_tps(opts.tps_rows, opts.tps_cols);
    out.tps.regularization = opts.tps_regularization;
    return out;
  }

  std::vector<Point2> src;
  std::vector<Point2> dst;
  for (const auto& p : c.landmark_pairs) {
    src.push_back(p.source - c.source_centroid);
    dst.push_back(p.target - c.target_centroid);
  }

  std::vector<Point2> target_landmarks;
  for (const auto& p : c.landmark_pairs) target_landmarks.push_back(p.target);
  if (target_landmarks.empty()) target_landmarks.push_back(c.target_centroid);
  const NormalizedFrame frame = detail::frame_around(target_landmarks, opts.frame_margin);

  const bool same = c.source_centroid == c.target_centroid && c.source_moments == c.target_moments &&
                    std::all_of(c.landmark_pairs.begin(), c.landmark_pairs.end(),
                                [](const PointPair& p) { return p.source == p.target; });
  if (same) {
    out.tps = identity_tps(opts.tps_rows, opts.tps_cols, frame);
    out.tps.regularization = opts.tps_regularization;
    return out;
  }

  const detail::Mat2 target_root = detail::spd_sqrt(c.target_moments);
  const detail::Mat2 source_inv_root = detail::inverse(detail::spd_sqrt(c.source_moments));
  auto linear_for = [&](double theta) { return target_root * detail::rotation(theta) * source_inv_root; };

  double theta = 0.0;
  if (!src.empty()) {
    const double step = 2.0 * std::numbers::pi / std::max(opts.angle_steps, 4);
    const auto axes_s = detail::principal_axes(c.source_moments);
    const auto axes_t = detail::principal_axes(c.target_moments);
    if (std::min(axes_s.ratio, axes_t.ratio) >= opts.axis_ratio) {
      // Elongated parts: the principal axes fix the rotation up to quarter turns.
      std::vector<double> candidates;
      for (int k = 0; k < 4; ++k) candidates.push_back(detail::wrap_angle(axes_t.angle - axes_s.angle + k * std::numbers::pi / 2));
      theta = detail::pick_rotation(candidates, linear_for, src, dst, out.landmark_residual);
    } else {
      theta = detail::scan_rotation(step, opts.angle_steps, linear_for, src, dst, out.landmark_residual);
    }
  }

  const detail::Mat2 lin = linear_for(theta);
  out.affine.a11 = lin.a;
  out.affine.a12 = lin.b;
  out.affine.a21 = lin.c;
  out.affine.a22 = lin.d;
  const Point2 mapped_centroid = out.affine.apply_linear(c.source_centroid);
  out.affine.tx = c.target_centroid.x - mapped_centroid.x;
  out.affine.ty = c.target_centroid.y - mapped_centroid.y;

  // TPS on the residual: target landmark g should land on affine(s) in the affinely warped frame.
  std::vector<Point2> from;
  std::vector<Point2> to;
  const std::size_t k = c.landmark_pairs.size();
  const int shift = src.empty() ? 0 : detail::landmark_cost(linear_for(theta), src, dst).shift;
  auto target_at = [&](std::size_t i) { return c.landmark_pairs[(i + static_cast<std::size_t>(shift)) % k].target; };
  for (std::size_t i = 0; i < k; ++i) {
    // Landmarks of the two parts start at different boundary points, so they slide along the
    // contour relative to each other. Only the normal part of the residual is shape change.
    const Point2 gp = target_at(i);
    Point2 residual = out.affine.apply(c.landmark_pairs[i].source) - gp;
    const Point2 tangent = target_at((i + 1) % k) - target_at((i + k - 1) % k);
    const double tl = norm(tangent);
    if (k >= 3 && tl > 0.0) {
      const Point2 n{-tangent.y / tl, tangent.x / tl};
      residual = (residual.x * n.x + residual.y * n.y) * n;
    }
    const Point2 g = frame.to_normalized(gp);
    const Point2 s = frame.to_normalized(gp + residual);
    const bool duplicate = std::any_of(from.begin(), from.end(), [&](Point2 q) { return squared_norm(q - g) < 1e-18; });
    if (!duplicate) {
      from.push_back(g);
      to.push_back(s);
    }
  }
  const auto displacements = detail::fit_grid_displacements(opts.tps_rows, opts.tps_cols, opts.tps_regularization,
                                                             opts.grid_ridge, from, to);
  out.tps = fit_tps_grid(opts.tps_rows, opts.tps_cols, displacements, opts.tps_regularization, frame);
  return out;
}

}  // namespace softwarp
