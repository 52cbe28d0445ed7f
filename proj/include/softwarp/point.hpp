#pragma once

#include <cmath>

namespace softwarp {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 p) noexcept { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) noexcept = default;
};

inline double squared_norm(Point2 p) noexcept { return p.x * p.x + p.y * p.y; }
inline double norm(Point2 p) noexcept { return std::sqrt(squared_norm(p)); }

}  // namespace softwarp
