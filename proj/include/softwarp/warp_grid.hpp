#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "softwarp/affine.hpp"
#include "softwarp/error.hpp"
#include "softwarp/point.hpp"
#include "softwarp/tps.hpp"

namespace softwarp {

/// Per-output-pixel source coordinates for backward (gather) warping.
///
/// Coordinates are in pixels of the source image, pixel centers at integers. Values outside
/// the source bounds are allowed; the sampler's border rule decides what they read.
class WarpGrid {
 public:
  WarpGrid() = default;
  WarpGrid(int height, int width) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) throw ShapeError("WarpGrid: dimensions must be positive");
    coords_.resize(static_cast<std::size_t>(height) * width);
  }

  static WarpGrid identity(int height, int width) {
    WarpGrid g(height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) g.at(y, x) = {static_cast<double>(x), static_cast<double>(y)};
    }
    return g;
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  Point2& at(int y, int x) noexcept { return coords_[static_cast<std::size_t>(y) * width_ + x]; }
  Point2 at(int y, int x) const noexcept { return coords_[static_cast<std::size_t>(y) * width_ + x]; }
  const std::vector<Point2>& coords() const noexcept { return coords_; }

  bool all_finite() const noexcept {
    for (const auto& p : coords_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    }
    return true;
  }

  friend bool operator==(const WarpGrid&, const WarpGrid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Point2> coords_;
};

inline WarpGrid affine_grid(const AffineParams& p, int height, int width) {
  WarpGrid g(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      g.at(y, x) = {p.a11 * x + p.a12 * y + p.tx, p.a21 * x + p.a22 * y + p.ty};
    }
  }
  return g;
}

inline WarpGrid tps_grid(const TpsParams& p, int height, int width) {
  WarpGrid g(height, width);
  const NormalizedFrame f = p.frame_for(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      g.at(y, x) = p.apply_pixel({static_cast<double>(x), static_cast<double>(y)}, f);
    }
  }
  return g;
}

namespace detail {

// Returns b exactly at t == 1 and a + t (b - a) otherwise, which is exact for a linear ramp
// of integers. Used for coordinate fields, where t may fall outside [0, 1] (extrapolation).
inline double lerp_exact(double a, double b, double t) noexcept { return t == 1.0 ? b : a + t * (b - a); }

// Lower cell index for interpolating a coordinate field of extent n at position v; the
// boundary cells are extended linearly beyond the field.
inline int field_cell(double v, int n) noexcept {
  if (n < 2) return 0;
  const double f = std::floor(v);
  if (f < 0.0) return 0;
  if (f > n - 2) return n - 2;
  return static_cast<int>(f);
}

}  // namespace detail

/// Bilinearly interpolates a coordinate field at a continuous position, extrapolating
/// linearly outside the field.
inline Point2 interpolate_field(const WarpGrid& g, Point2 p) noexcept {
  const int x0 = detail::field_cell(p.x, g.width());
  const int y0 = detail::field_cell(p.y, g.height());
  const int x1 = g.width() > 1 ? x0 + 1 : x0;
  const int y1 = g.height() > 1 ? y0 + 1 : y0;
  const double fx = g.width() > 1 ? p.x - x0 : 0.0;
  const double fy = g.height() > 1 ? p.y - y0 : 0.0;
  const Point2 v00 = g.at(y0, x0), v10 = g.at(y0, x1), v01 = g.at(y1, x0), v11 = g.at(y1, x1);
  using detail::lerp_exact;
  const Point2 top{lerp_exact(v00.x, v10.x, fx), lerp_exact(v00.y, v10.y, fx)};
  const Point2 bottom{lerp_exact(v01.x, v11.x, fx), lerp_exact(v01.y, v11.y, fx)};
  return {lerp_exact(top.x, bottom.x, fy), lerp_exact(top.y, bottom.y, fy)};
}

/// result[p] = first(second[p]): warping with the result equals warping with `first` and
/// then warping that output with `second` (for an affine `first` and a TPS `second`: the
/// affine is applied first, the TPS refines it).
inline WarpGrid compose_grids(const WarpGrid& first, const WarpGrid& second) {
  if (first.height() != second.height() || first.width() != second.width()) {
    throw ShapeError("compose_grids: grid dimensions differ");
  }
  WarpGrid out(second.height(), second.width());
  for (int y = 0; y < second.height(); ++y) {
    for (int x = 0; x < second.width(); ++x) out.at(y, x) = interpolate_field(first, second.at(y, x));
  }
  return out;
}

}  // namespace softwarp
