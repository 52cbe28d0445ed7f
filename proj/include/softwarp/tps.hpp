#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softwarp/affine.hpp"
#include "softwarp/error.hpp"
#include "softwarp/point.hpp"

namespace softwarp {

/// Maps pixel coordinates to the normalized square [-1, 1]^2 used by TPS control points:
/// u = (x - cx) / sx, v = (y - cy) / sy.
struct NormalizedFrame {
  double cx = 0.0;
  double cy = 0.0;
  double sx = 1.0;
  double sy = 1.0;

  /// The whole image: pixel 0 maps to -1 and pixel (size - 1) to +1.
  static NormalizedFrame for_image(int height, int width) noexcept {
    const double hx = width > 1 ? 0.5 * (width - 1) : 1.0;
    const double hy = height > 1 ? 0.5 * (height - 1) : 1.0;
    return {0.5 * (width - 1), 0.5 * (height - 1), hx, hy};
  }

  Point2 to_normalized(Point2 p) const noexcept { return {(p.x - cx) / sx, (p.y - cy) / sy}; }
  Point2 to_pixel(Point2 u) const noexcept { return {cx + sx * u.x, cy + sy * u.y}; }

  friend bool operator==(const NormalizedFrame&, const NormalizedFrame&) = default;
};

/// Radial kernel of the thin-plate spline, written in terms of the squared distance:
/// U(r^2) = r^2 log r^2, with U(0) = 0.
inline double tps_kernel(double r2) noexcept { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

/// Thin-plate spline in normalized coordinates.
///
/// f(p) = A p + sum_i w_i U(|p - s_i|^2), where the kernel weights satisfy
/// sum w_i = sum w_i s_i.x = sum w_i s_i.y = 0. `target_displacements[i]` is the requested
/// target of control point i minus the control point itself.
struct TpsParams {
  int grid_rows = 3;
  int grid_cols = 3;
  std::vector<Point2> source_points;
  std::vector<Point2> target_displacements;
  std::vector<Point2> kernel_weights;
  AffineParams affine_part;
  double regularization = 0.0;
  /// Pixel frame of the normalized coordinates; the whole image when empty.
  std::optional<NormalizedFrame> frame;

  Point2 apply(Point2 u) const noexcept {
    Point2 out = affine_part.apply(u);
    for (std::size_t i = 0; i < source_points.size(); ++i) {
      const double k = tps_kernel(squared_norm(u - source_points[i]));
      out.x += kernel_weights[i].x * k;
      out.y += kernel_weights[i].y * k;
    }
    return out;
  }

  NormalizedFrame frame_for(int height, int width) const noexcept {
    return frame.value_or(NormalizedFrame::for_image(height, width));
  }

  /// Evaluates the map on pixel coordinates through the frame.
  Point2 apply_pixel(Point2 p, const NormalizedFrame& f) const noexcept {
    return f.to_pixel(apply(f.to_normalized(p)));
  }
};

/// Uniform rows x cols lattice over [-1, 1]^2 in row-major order (rows along y).
inline std::vector<Point2> control_grid(int rows, int cols) {
  if (rows < 2 || cols < 2) throw InvalidArgument("control_grid: need at least 2 rows and 2 columns");
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      pts.push_back({-1.0 + 2.0 * c / (cols - 1), -1.0 + 2.0 * r / (rows - 1)});
    }
  }
  return pts;
}

/// Solves the TPS system [K + lambda I, P; P^T, 0] [w; a] = [targets; 0].
///
/// With regularization 0 the spline interpolates every control point.
inline TpsParams fit_tps(std::span<const Point2> source, std::span<const Point2> target,
                         double regularization) {
  const std::size_t n = source.size();
  if (n != target.size()) throw InvalidArgument("fit_tps: source and target counts differ");
  if (n < 3) throw SingularSystemError("fit_tps: need at least 3 control points");
  if (!(regularization >= 0.0) || !std::isfinite(regularization)) {
    throw InvalidArgument("fit_tps: regularization must be finite and non-negative");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (squared_norm(source[i] - source[j]) < 1e-24) {
        throw SingularSystemError("fit_tps: coincident control points " + std::to_string(i) + " and " +
                                  std::to_string(j));
      }
    }
  }

  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(m + 3, m + 3);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 3, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Point2 si = source[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m; ++j) {
      system(i, j) = tps_kernel(squared_norm(si - source[static_cast<std::size_t>(j)]));
    }
    system(i, i) += regularization;
    system(i, m) = 1.0;
    system(i, m + 1) = si.x;
    system(i, m + 2) = si.y;
    system(m, i) = 1.0;
    system(m + 1, i) = si.x;
    system(m + 2, i) = si.y;
    rhs(i, 0) = target[static_cast<std::size_t>(i)].x;
    rhs(i, 1) = target[static_cast<std::size_t>(i)].y;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw SingularSystemError("fit_tps: singular system (collinear control points?)");
  const Eigen::MatrixXd sol = lu.solve(rhs);

  TpsParams p;
  p.grid_rows = 1;
  p.grid_cols = static_cast<int>(n);
  p.source_points.assign(source.begin(), source.end());
  p.target_displacements.resize(n);
  p.kernel_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.target_displacements[i] = target[i] - source[i];
    p.kernel_weights[i] = {sol(static_cast<Eigen::Index>(i), 0), sol(static_cast<Eigen::Index>(i), 1)};
  }
  p.affine_part = {sol(m + 1, 0), sol(m + 2, 0), sol(m, 0), sol(m + 1, 1), sol(m + 2, 1), sol(m, 1)};
  p.regularization = regularization;
  return p;
}

/// Fits a TPS whose control points are the uniform rows x cols grid.
inline TpsParams fit_tps_grid(int rows, int cols, std::span<const Point2> displacements,
                              double regularization, std::optional<NormalizedFrame> frame = std::nullopt) {
  const auto grid = control_grid(rows, cols);
  if (displacements.size() != grid.size()) {
    throw InvalidArgument("fit_tps_grid: expected " + std::to_string(grid.size()) + " displacements");
  }
  std::vector<Point2> targets(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) targets[i] = grid[i] + displacements[i];
  TpsParams p = fit_tps(grid, targets, regularization);
  p.grid_rows = rows;
  p.grid_cols = cols;
  p.target_displacements.assign(displacements.begin(), displacements.end());
  p.frame = frame;
  return p;
}

/// Zero displacements on a rows x cols grid: evaluates to the identity.
inline TpsParams identity_tps(int rows = 3, int cols = 3, std::optional<NormalizedFrame> frame = std::nullopt) {
  TpsParams p;
  p.grid_rows = rows;
  p.grid_cols = cols;
  p.source_points = control_grid(rows, cols);
  p.target_displacements.assign(p.source_points.size(), Point2{});
  p.kernel_weights.assign(p.source_points.size(), Point2{});
  p.affine_part = AffineParams::identity();
  p.frame = frame;
  return p;
}

inline bool is_uniform_grid(const TpsParams& p) {
  if (p.grid_rows < 2 || p.grid_cols < 2) return false;
  const auto grid = control_grid(p.grid_rows, p.grid_cols);
  if (grid.size() != p.source_points.size()) return false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (squared_norm(grid[i] - p.source_points[i]) > 1e-24) return false;
  }
  return true;
}

}  // namespace softwarp
