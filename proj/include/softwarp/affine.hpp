#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "softwarp/error.hpp"
#include "softwarp/point.hpp"

namespace softwarp {

/// x' = a11 x + a12 y + tx,  y' = a21 x + a22 y + ty.
struct AffineParams {
  double a11 = 1.0;
  double a12 = 0.0;
  double tx = 0.0;
  double a21 = 0.0;
  double a22 = 1.0;
  double ty = 0.0;

  static constexpr AffineParams identity() noexcept { return {}; }
  static constexpr AffineParams translation(double dx, double dy) noexcept {
    return {1.0, 0.0, dx, 0.0, 1.0, dy};
  }
  static AffineParams rotation(double radians, Point2 center = {}) noexcept {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    return {c, -s, center.x - c * center.x + s * center.y, s, c, center.y - s * center.x - c * center.y};
  }

  Point2 apply(Point2 p) const noexcept { return {a11 * p.x + a12 * p.y + tx, a21 * p.x + a22 * p.y + ty}; }
  Point2 apply_linear(Point2 p) const noexcept { return {a11 * p.x + a12 * p.y, a21 * p.x + a22 * p.y}; }

  double determinant() const noexcept { return a11 * a22 - a12 * a21; }

  /// Angle of the closest similarity transform, in radians.
  double rotation_angle() const noexcept { return std::atan2(a21 - a12, a11 + a22); }

  bool is_finite() const noexcept {
    return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(tx) && std::isfinite(a21) &&
           std::isfinite(a22) && std::isfinite(ty);
  }

  AffineParams inverse() const {
    const double det = determinant();
    if (!(std::abs(det) > 1e-300)) throw RankDeficientError("AffineParams::inverse: singular linear part");
    const double i11 = a22 / det;
    const double i12 = -a12 / det;
    const double i21 = -a21 / det;
    const double i22 = a11 / det;
    return {i11, i12, -(i11 * tx + i12 * ty), i21, i22, -(i21 * tx + i22 * ty)};
  }

  /// this ∘ other: apply `other` first.
  AffineParams compose(const AffineParams& o) const noexcept {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22, a11 * o.tx + a12 * o.ty + tx,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22, a21 * o.tx + a22 * o.ty + ty};
  }

  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

struct PointPair {
  Point2 source;
  Point2 target;
};

/// Least-squares affine map taking each source point onto its target.
///
/// Solved by column-pivoting QR on the centred design matrix; a numerical rank below 3
/// (fewer than three distinct, non-collinear sources) throws RankDeficientError.
inline AffineParams estimate_affine(std::span<const PointPair> pairs) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  if (n < 3) throw RankDeficientError("estimate_affine: need at least 3 point pairs");

  // Centring keeps the design well conditioned when coordinates are large.
  Point2 mean{};
  for (const auto& p : pairs) mean = mean + p.source;
  mean = (1.0 / static_cast<double>(n)) * mean;

  Eigen::MatrixXd design(n, 3);
  Eigen::MatrixXd rhs(n, 2);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 s = pairs[static_cast<std::size_t>(i)].source - mean;
    design(i, 0) = s.x;
    design(i, 1) = s.y;
    design(i, 2) = 1.0;
    rhs(i, 0) = pairs[static_cast<std::size_t>(i)].target.x;
    rhs(i, 1) = pairs[static_cast<std::size_t>(i)].target.y;
    scale = std::max({scale, std::abs(s.x), std::abs(s.y)});
  }
  if (!(scale > 0.0)) throw RankDeficientError("estimate_affine: all source points coincide");
  design.leftCols(2) /= scale;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw RankDeficientError("estimate_affine: source points are collinear");
  const Eigen::MatrixXd sol = qr.solve(rhs);

  AffineParams a;
  a.a11 = sol(0, 0) / scale;
  a.a12 = sol(1, 0) / scale;
  a.a21 = sol(0, 1) / scale;
  a.a22 = sol(1, 1) / scale;
  a.tx = sol(2, 0) - a.a11 * mean.x - a.a12 * mean.y;
  a.ty = sol(2, 1) - a.a21 * mean.x - a.a22 * mean.y;
  return a;
}

}  // namespace softwarp
