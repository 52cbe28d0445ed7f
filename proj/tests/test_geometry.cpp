#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "softwarp/affine.hpp"
#include "softwarp/part_matching.hpp"
#include "softwarp/part_transform.hpp"
#include "softwarp/tps.hpp"
#include "softwarp/warp_grid.hpp"

using namespace softwarp;

namespace {

// Normal equations for one output row, solved by Cramer's rule: [sum xx, xy, x; xy, yy, y; x, y, n].
std::array<double, 3> normal_equations_row(const std::vector<PointPair>& pairs, bool second) {
  double m[3][3] = {};
  double r[3] = {};
  for (const auto& p : pairs) {
    const double v[3] = {p.source.x, p.source.y, 1.0};
    const double t = second ? p.target.y : p.target.x;
    for (int i = 0; i < 3; ++i) {
      r[i] += v[i] * t;
      for (int j = 0; j < 3; ++j) m[i][j] += v[i] * v[j];
    }
  }
  auto det3 = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det3(m);
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) {
    double mk[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mk[i][j] = j == k ? r[i] : m[i][j];
    out[static_cast<std::size_t>(k)] = det3(mk) / d;
  }
  return out;
}

AffineParams random_affine(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lin(-2.0, 2.0), tr(-10.0, 10.0);
  AffineParams a;
  do {
    a = {lin(rng), lin(rng), tr(rng), lin(rng), lin(rng), tr(rng)};
  } while (std::abs(a.determinant()) < 0.2);
  return a;
}

SegmentationMap ellipse_map(int h, int w, Point2 c, double ax, double by, double angle, int label) {
  SegmentationMap m(h, w);
  const double cs = std::cos(angle), sn = std::sin(angle);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - c.x, dy = y - c.y;
      const double u = cs * dx + sn * dy, v = -sn * dx + cs * dy;
      if ((u * u) / (ax * ax) + (v * v) / (by * by) <= 1.0) m.set(y, x, label);
    }
  }
  return m;
}

SegmentationMap shifted(const SegmentationMap& m, int dx, int dy) {
  SegmentationMap out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const int sx = x - dx, sy = y - dy;
      if (sx >= 0 && sy >= 0 && sx < m.width() && sy < m.height()) out.set(y, x, m.at(sy, sx));
    }
  return out;
}

}  // namespace

// ---- estimate_affine --------------------------------------------------------------------

TEST(EstimateAffine, PureTranslation) {
  const std::vector<PointPair> pairs = {{{0, 0}, {1, 2}}, {{1, 0}, {2, 2}}, {{0, 1}, {1, 3}}};
  const auto a = estimate_affine(pairs);
  EXPECT_NEAR(a.a11, 1.0, 1e-12);
  EXPECT_NEAR(a.a12, 0.0, 1e-12);
  EXPECT_NEAR(a.a21, 0.0, 1e-12);
  EXPECT_NEAR(a.a22, 1.0, 1e-12);
  EXPECT_NEAR(a.tx, 1.0, 1e-12);
  EXPECT_NEAR(a.ty, 2.0, 1e-12);
}

TEST(EstimateAffine, IdentityPairs) {
  std::vector<PointPair> pairs;
  for (Point2 p : {Point2{0, 0}, Point2{3, 1}, Point2{-2, 5}, Point2{4, 4}}) pairs.push_back({p, p});
  const auto a = estimate_affine(pairs);
  for (double v : {a.a11 - 1, a.a12, a.tx, a.a21, a.a22 - 1, a.ty}) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(EstimateAffine, RecoversRandomAffinesAgainstNormalEquations) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pt(-20.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    const AffineParams truth = random_affine(rng);
    std::vector<PointPair> pairs;
    for (int i = 0; i < 6; ++i) {
      const Point2 s{pt(rng), pt(rng)};
      pairs.push_back({s, truth.apply(s)});
    }
    const auto a = estimate_affine(pairs);
    const auto rx = normal_equations_row(pairs, false);
    const auto ry = normal_equations_row(pairs, true);
    EXPECT_NEAR(a.a11, truth.a11, 1e-9);
    EXPECT_NEAR(a.a12, truth.a12, 1e-9);
    EXPECT_NEAR(a.tx, truth.tx, 1e-9);
    EXPECT_NEAR(a.a21, truth.a21, 1e-9);
    EXPECT_NEAR(a.a22, truth.a22, 1e-9);
    EXPECT_NEAR(a.ty, truth.ty, 1e-9);
    EXPECT_NEAR(a.a11, rx[0], 1e-8);
    EXPECT_NEAR(a.a12, rx[1], 1e-8);
    EXPECT_NEAR(a.tx, rx[2], 1e-8);
    EXPECT_NEAR(a.a21, ry[0], 1e-8);
    EXPECT_NEAR(a.a22, ry[1], 1e-8);
    EXPECT_NEAR(a.ty, ry[2], 1e-8);
  }
}

TEST(EstimateAffine, LeastSquaresMatchesNormalEquationsOnNoisyPairs) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pt(-20.0, 20.0), noise(-0.5, 0.5);
  std::vector<PointPair> pairs;
  const AffineParams truth = random_affine(rng);
  for (int i = 0; i < 30; ++i) {
    const Point2 s{pt(rng), pt(rng)};
    pairs.push_back({s, truth.apply(s) + Point2{noise(rng), noise(rng)}});
  }
  const auto a = estimate_affine(pairs);
  const auto rx = normal_equations_row(pairs, false);
  const auto ry = normal_equations_row(pairs, true);
  EXPECT_NEAR(a.a11, rx[0], 1e-9);
  EXPECT_NEAR(a.a12, rx[1], 1e-9);
  EXPECT_NEAR(a.tx, rx[2], 1e-9);
  EXPECT_NEAR(a.a21, ry[0], 1e-9);
  EXPECT_NEAR(a.a22, ry[1], 1e-9);
  EXPECT_NEAR(a.ty, ry[2], 1e-9);
}

TEST(EstimateAffine, RejectsDegenerateConfigurations) {
  const std::vector<PointPair> collinear = {{{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}}, {{3, 3}, {3, 3}}};
  EXPECT_THROW(estimate_affine(collinear), RankDeficientError);
  const std::vector<PointPair> duplicate = {{{1, 1}, {0, 0}}, {{1, 1}, {1, 0}}, {{1, 1}, {0, 1}}};
  EXPECT_THROW(estimate_affine(duplicate), RankDeficientError);
  const std::vector<PointPair> two = {{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}};
  EXPECT_THROW(estimate_affine(two), RankDeficientError);
}

TEST(AffineParams, InverseAndCompose) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_affine(rng);
    const auto id = a.compose(a.inverse());
    EXPECT_NEAR(id.a11, 1.0, 1e-12);
    EXPECT_NEAR(id.a12, 0.0, 1e-12);
    EXPECT_NEAR(id.tx, 0.0, 1e-10);
    EXPECT_NEAR(id.a22, 1.0, 1e-12);
    EXPECT_NEAR(id.ty, 0.0, 1e-10);
  }
  const auto r = AffineParams::rotation(0.3, {5, 7});
  EXPECT_NEAR(r.rotation_angle(), 0.3, 1e-15);
  const Point2 c = r.apply({5, 7});
  EXPECT_NEAR(c.x, 5.0, 1e-12);
  EXPECT_NEAR(c.y, 7.0, 1e-12);
}

// ---- fit_tps ----------------------------------------------------------------------------

TEST(FitTps, IdentityTargets) {
  const auto grid = control_grid(3, 3);
  const auto t = fit_tps(grid, grid, 0.0);
  for (const auto& w : t.kernel_weights) {
    EXPECT_NEAR(w.x, 0.0, 1e-12);
    EXPECT_NEAR(w.y, 0.0, 1e-12);
  }
  EXPECT_NEAR(t.affine_part.a11, 1.0, 1e-12);
  EXPECT_NEAR(t.affine_part.a12, 0.0, 1e-12);
  EXPECT_NEAR(t.affine_part.a21, 0.0, 1e-12);
  EXPECT_NEAR(t.affine_part.a22, 1.0, 1e-12);
  EXPECT_NEAR(t.affine_part.tx, 0.0, 1e-12);
  EXPECT_NEAR(t.affine_part.ty, 0.0, 1e-12);
}

TEST(FitTps, ReproducesAffineAtRandomProbes) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> probe(-1.5, 1.5);
  for (int trial = 0; trial < 5; ++trial) {
    const AffineParams a = random_affine(rng);
    const auto src = control_grid(3, 3);
    std::vector<Point2> dst;
    for (const auto& s : src) dst.push_back(a.apply(s));
    const auto t = fit_tps(src, dst, 0.0);
    for (int i = 0; i < 100; ++i) {
      const Point2 p{probe(rng), probe(rng)};
      const Point2 got = t.apply(p);
      const Point2 want = a.apply(p);
      EXPECT_NEAR(got.x, want.x, 1e-8);
      EXPECT_NEAR(got.y, want.y, 1e-8);
    }
  }
}

TEST(FitTps, SingleDisplacedControlPoint) {
  std::vector<Point2> d(9);
  d[4] = {0.1, 0.0};
  const auto t = fit_tps_grid(3, 3, d, 0.0);
  const auto grid = control_grid(3, 3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point2 got = t.apply(grid[i]);
    const Point2 want = grid[i] + d[i];
    EXPECT_NEAR(got.x, want.x, 1e-9);
    EXPECT_NEAR(got.y, want.y, 1e-9);
  }
}

TEST(FitTps, InterpolationExactnessAndSideConditions) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> disp(-0.3, 0.3);
  for (auto [rows, cols] : {std::pair{3, 3}, std::pair{4, 4}, std::pair{3, 5}}) {
    std::vector<Point2> d(static_cast<std::size_t>(rows * cols));
    for (auto& p : d) p = {disp(rng), disp(rng)};
    const auto t = fit_tps_grid(rows, cols, d, 0.0);
    const auto grid = control_grid(rows, cols);
    double sw[2] = {}, swx[2] = {}, swy[2] = {};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Point2 got = t.apply(grid[i]);
      EXPECT_NEAR(got.x, grid[i].x + d[i].x, 1e-9);
      EXPECT_NEAR(got.y, grid[i].y + d[i].y, 1e-9);
      const auto& w = t.kernel_weights[i];
      sw[0] += w.x, sw[1] += w.y;
      swx[0] += w.x * grid[i].x, swx[1] += w.y * grid[i].x;
      swy[0] += w.x * grid[i].y, swy[1] += w.y * grid[i].y;
    }
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(sw[k], 0.0, 1e-9);
      EXPECT_NEAR(swx[k], 0.0, 1e-9);
      EXPECT_NEAR(swy[k], 0.0, 1e-9);
    }
  }
}

TEST(FitTps, RegularizationSmoothsButKeepsAffine) {
  std::vector<Point2> d(9);
  d[4] = {0.2, -0.1};
  const auto exact = fit_tps_grid(3, 3, d, 0.0);
  const auto smooth = fit_tps_grid(3, 3, d, 1.0);
  const Point2 c = control_grid(3, 3)[4];
  EXPECT_LT(norm(smooth.apply(c) - c), norm(exact.apply(c) - c));
}

TEST(FitTps, RejectsSingularInputs) {
  const std::vector<Point2> coincident = {{0, 0}, {0, 0}, {1, 0}, {0, 1}};
  EXPECT_THROW(fit_tps(coincident, coincident, 0.0), SingularSystemError);
  const std::vector<Point2> line = {{0, 0}, {1, 1}, {2, 2}};
  EXPECT_THROW(fit_tps(line, line, 0.0), SingularSystemError);
  EXPECT_THROW(fit_tps(std::vector<Point2>{{0, 0}, {1, 0}}, std::vector<Point2>{{0, 0}, {1, 0}}, 0.0), SingularSystemError);
  EXPECT_THROW(fit_tps(control_grid(3, 3), control_grid(3, 3), -1.0), InvalidArgument);
}

TEST(TpsKernel, ValueAtZeroAndOne) {
  EXPECT_EQ(tps_kernel(0.0), 0.0);
  EXPECT_EQ(tps_kernel(1.0), 0.0);
  EXPECT_NEAR(tps_kernel(4.0), 4.0 * std::log(4.0), 1e-15);
}

// ---- grids ------------------------------------------------------------------------------

TEST(AffineGrid, IdentityIsLatticeBitwise) { EXPECT_EQ(affine_grid(AffineParams::identity(), 7, 9), WarpGrid::identity(7, 9)); }

TEST(AffineGrid, Translation) {
  const auto g = affine_grid(AffineParams::translation(2, 0), 4, 5);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(g.at(y, x), (Point2{x + 2.0, static_cast<double>(y)}));
}

TEST(AffineGrid, QuarterTurnMapsCornerToCorner) {
  const int n = 11;
  const double c = (n - 1) / 2.0;
  const auto g = affine_grid(AffineParams::rotation(std::numbers::pi / 2, {c, c}), n, n);
  // (x, y) -> (c - (y - c), c + (x - c)); the corner (0, 0) lands on (n - 1, 0).
  const Point2 p = g.at(0, 0);
  EXPECT_NEAR(p.x, n - 1.0, 1e-12);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
  const Point2 q = g.at(n - 1, n - 1);
  EXPECT_NEAR(q.x, 0.0, 1e-12);
  EXPECT_NEAR(q.y, n - 1.0, 1e-12);
}

TEST(TpsGrid, IdentityParams) {
  const auto g = tps_grid(identity_tps(), 13, 17);
  const auto id = WarpGrid::identity(13, 17);
  for (int y = 0; y < 13; ++y)
    for (int x = 0; x < 17; ++x) {
      EXPECT_NEAR(g.at(y, x).x, id.at(y, x).x, 1e-9);
      EXPECT_NEAR(g.at(y, x).y, id.at(y, x).y, 1e-9);
    }
}

TEST(TpsGrid, ControlPixelsHitFittedTargets) {
  // 3x3 grid over a 21x21 image: control points sit on pixels 0, 10, 20.
  std::vector<Point2> d(9);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& p : d) p = {u(rng), u(rng)};
  const auto t = fit_tps_grid(3, 3, d, 0.0);
  const auto g = tps_grid(t, 21, 21);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const Point2 dd = d[static_cast<std::size_t>(r * 3 + c)];
      const Point2 want{10.0 * c + 10.0 * dd.x, 10.0 * r + 10.0 * dd.y};
      EXPECT_NEAR(g.at(10 * r, 10 * c).x, want.x, 1e-9);
      EXPECT_NEAR(g.at(10 * r, 10 * c).y, want.y, 1e-9);
    }
  }
}

TEST(TpsGrid, AffineFitEqualsAffineGrid) {
  const int h = 24, w = 31;
  const auto frame = NormalizedFrame::for_image(h, w);
  const AffineParams pix{1.05, 0.1, -2.0, -0.08, 0.97, 1.5};
  const auto src = control_grid(3, 3);
  std::vector<Point2> dst;
  for (const auto& s : src) dst.push_back(frame.to_normalized(pix.apply(frame.to_pixel(s))));
  const auto t = fit_tps(src, dst, 0.0);
  const auto a = tps_grid(t, h, w);
  const auto b = affine_grid(pix, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      EXPECT_NEAR(a.at(y, x).x, b.at(y, x).x, 1e-6);
      EXPECT_NEAR(a.at(y, x).y, b.at(y, x).y, 1e-6);
    }
}

TEST(ComposeGrids, IdentityIsNeutralExactly) {
  const auto g = affine_grid({0.9, 0.2, 1.3, -0.1, 1.1, -0.7}, 9, 12);
  const auto id = WarpGrid::identity(9, 12);
  EXPECT_EQ(compose_grids(id, g), g);
  EXPECT_EQ(compose_grids(g, id), g);
}

TEST(ComposeGrids, TranslationsAdd) {
  const auto g = compose_grids(affine_grid(AffineParams::translation(1, 0), 6, 6), affine_grid(AffineParams::translation(0, 1), 6, 6));
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      EXPECT_NEAR(g.at(y, x).x, x + 1.0, 1e-12);
      EXPECT_NEAR(g.at(y, x).y, y + 1.0, 1e-12);
    }
}

TEST(ComposeGrids, RealizesAffineComposition) {
  const AffineParams a{1.1, 0.05, 0.5, -0.03, 0.95, -0.25};
  const AffineParams b{0.98, -0.1, 0.75, 0.07, 1.02, 0.4};
  const auto g = compose_grids(affine_grid(a, 16, 16), affine_grid(b, 16, 16));
  const auto want = a.compose(b);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const Point2 p = want.apply({static_cast<double>(x), static_cast<double>(y)});
      EXPECT_NEAR(g.at(y, x).x, p.x, 1e-9);
      EXPECT_NEAR(g.at(y, x).y, p.y, 1e-9);
    }
}

TEST(ComposeGrids, AssociativeOnSmoothGrids) {
  const int n = 20;
  const auto f = affine_grid({1.02, 0.01, 0.3, -0.02, 0.99, 0.1}, n, n);
  const auto g = affine_grid({0.97, -0.03, -0.2, 0.02, 1.01, 0.4}, n, n);
  const auto h = affine_grid({1.0, 0.02, 0.15, 0.01, 0.98, -0.3}, n, n);
  const auto left = compose_grids(compose_grids(f, g), h);
  const auto right = compose_grids(f, compose_grids(g, h));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      EXPECT_NEAR(left.at(y, x).x, right.at(y, x).x, 1e-9);
      EXPECT_NEAR(left.at(y, x).y, right.at(y, x).y, 1e-9);
    }
}

TEST(ComposeGrids, RejectsMismatchedSizes) { EXPECT_THROW(compose_grids(WarpGrid::identity(3, 3), WarpGrid::identity(3, 4)), ShapeError); }

// ---- match_parts ------------------------------------------------------------------------

TEST(MatchParts, IdenticalMapsGiveEqualStatistics) {
  const auto m = ellipse_map(48, 48, {23.3, 20.6}, 12, 6, 0.4, 7);
  const auto r = match_parts(m, m);
  ASSERT_EQ(r.parts.size(), 2u);  // background and label 7
  for (const auto& c : r.parts) {
    EXPECT_EQ(c.source_centroid, c.target_centroid);
    EXPECT_EQ(c.source_moments, c.target_moments);
    ASSERT_EQ(c.landmark_pairs.size(), static_cast<std::size_t>(kDefaultLandmarks));
    for (const auto& p : c.landmark_pairs) EXPECT_EQ(p.source, p.target);
  }
  EXPECT_TRUE(r.omitted_labels.empty());
}

TEST(MatchParts, IntegerShiftMovesCentroidsExactly) {
  const auto a = ellipse_map(48, 64, {20.0, 24.0}, 10, 5, 0.3, 4);
  const auto b = shifted(a, 3, 0);
  const auto r = match_parts(a, b);
  for (const auto& c : r.parts) {
    if (c.label != 4) continue;
    EXPECT_EQ(c.target_centroid.x - c.source_centroid.x, 3.0);
    EXPECT_EQ(c.target_centroid.y - c.source_centroid.y, 0.0);
    EXPECT_EQ(c.source_moments, c.target_moments);
    // Landmarks sit at fractional contour positions, so the shift is exact only up to rounding.
    for (const auto& p : c.landmark_pairs) {
      EXPECT_NEAR(p.target.x - p.source.x, 3.0, 1e-12);
      EXPECT_NEAR(p.target.y - p.source.y, 0.0, 1e-12);
    }
  }
}

TEST(MatchParts, AbsentPartIsOmitted) {
  auto a = ellipse_map(32, 32, {10, 10}, 5, 3, 0.0, 4);
  const auto b = a;
  a.set(30, 30, 9);
  const auto r = match_parts(a, b);
  ASSERT_EQ(r.omitted_labels, std::vector<int>{9});
  for (const auto& c : r.parts) EXPECT_NE(c.label, 9);
}

TEST(MatchParts, SwappingInputsSwapsRoles) {
  const auto a = ellipse_map(40, 40, {15, 18}, 9, 4, 0.2, 3);
  const auto b = ellipse_map(40, 40, {22, 20}, 8, 5, 1.0, 3);
  const auto ab = match_parts(a, b);
  const auto ba = match_parts(b, a);
  ASSERT_EQ(ab.parts.size(), ba.parts.size());
  for (std::size_t i = 0; i < ab.parts.size(); ++i) {
    const auto& x = ab.parts[i];
    const auto& y = ba.parts[i];
    EXPECT_EQ(x.source_centroid, y.target_centroid);
    EXPECT_EQ(x.target_moments, y.source_moments);
    EXPECT_EQ(x.source_area, y.target_area);
    ASSERT_EQ(x.landmark_pairs.size(), y.landmark_pairs.size());
    for (std::size_t k = 0; k < x.landmark_pairs.size(); ++k) {
      EXPECT_EQ(x.landmark_pairs[k].source, y.landmark_pairs[k].target);
      EXPECT_EQ(x.landmark_pairs[k].target, y.landmark_pairs[k].source);
    }
  }
}

TEST(MatchParts, MomentsArePositiveSemidefinite) {
  const auto a = ellipse_map(40, 40, {15, 18}, 9, 4, 0.7, 3);
  for (const auto& c : match_parts(a, a).parts) {
    EXPECT_GE(c.source_moments.xx, 0.0);
    EXPECT_GE(c.source_moments.yy, 0.0);
    EXPECT_GE(c.source_moments.determinant(), -1e-9);
  }
}

TEST(MatchParts, RejectsMismatchedShapes) {
  EXPECT_THROW(match_parts(SegmentationMap(4, 4), SegmentationMap(4, 5)), ShapeError);
  EXPECT_THROW(match_parts(SegmentationMap(4, 4), SegmentationMap(4, 4), 0), InvalidArgument);
}

// ---- estimate_part_transform ------------------------------------------------------------

TEST(EstimatePartTransform, IdenticalPartIsIdentity) {
  const auto m = ellipse_map(48, 48, {23.3, 20.6}, 12, 6, 0.4, 7);
  for (const auto& c : match_parts(m, m).parts) {
    const auto t = estimate_part_transform(c);
    EXPECT_EQ(t.affine, AffineParams::identity());
    for (const auto& w : t.tps.kernel_weights) EXPECT_EQ(w, Point2{});
    for (const auto& d : t.tps.target_displacements) EXPECT_EQ(d, Point2{});
    EXPECT_EQ(t.tps.affine_part, AffineParams::identity());
  }
}

TEST(EstimatePartTransform, AnalyticEllipseScaledTwice) {
  // Ellipse with semi-axes (a, b) rotated by phi: second central moments R diag(a^2/4, b^2/4) R^T.
  const double a = 9.0, b = 4.0, phi = 0.6;
  const double c = std::cos(phi), s = std::sin(phi);
  auto moments = [&](double k) {
    const double l1 = k * k * a * a / 4, l2 = k * k * b * b / 4;
    return Moments2{c * c * l1 + s * s * l2, c * s * (l1 - l2), s * s * l1 + c * c * l2};
  };
  PartCorrespondence pc;
  pc.label = 5;
  pc.source_area = 113;
  pc.target_area = 452;
  pc.source_centroid = {30.0, 40.0};
  pc.target_centroid = {30.0, 40.0};
  pc.source_moments = moments(1.0);
  pc.target_moments = moments(2.0);
  for (int k = 0; k < 16; ++k) {
    const double t = 2 * std::numbers::pi * k / 16;
    const Point2 e{a * std::cos(t), b * std::sin(t)};
    const Point2 r{c * e.x - s * e.y, s * e.x + c * e.y};
    pc.landmark_pairs.push_back({pc.source_centroid + r, pc.target_centroid + 2.0 * r});
  }
  const auto t = estimate_part_transform(pc);
  EXPECT_NEAR(t.affine.a11, 2.0, 1e-6);
  EXPECT_NEAR(t.affine.a12, 0.0, 1e-6);
  EXPECT_NEAR(t.affine.a21, 0.0, 1e-6);
  EXPECT_NEAR(t.affine.a22, 2.0, 1e-6);
  const Point2 mapped = t.affine.apply(pc.source_centroid);
  EXPECT_NEAR(mapped.x, pc.target_centroid.x, 1e-9);
  EXPECT_NEAR(mapped.y, pc.target_centroid.y, 1e-9);
}

TEST(EstimatePartTransform, PureTranslation) {
  const auto a = ellipse_map(64, 64, {24.0, 30.0}, 14, 6, 0.5, 12);
  const auto b = shifted(a, 5, -3);
  for (const auto& c : match_parts(a, b).parts) {
    if (c.label != 12) continue;
    const auto t = estimate_part_transform(c);
    EXPECT_NEAR(t.affine.a11, 1.0, 1e-9);
    EXPECT_NEAR(t.affine.a12, 0.0, 1e-9);
    EXPECT_NEAR(t.affine.a21, 0.0, 1e-9);
    EXPECT_NEAR(t.affine.a22, 1.0, 1e-9);
    EXPECT_NEAR(t.affine.tx, 5.0, 1e-9);
    EXPECT_NEAR(t.affine.ty, -3.0, 1e-9);
    for (const auto& d : t.tps.target_displacements) EXPECT_LE(norm(d), 1e-6);
  }
}

TEST(EstimatePartTransform, RecoversRotationOfRasterizedEllipse) {
  const double truth = 0.5;
  const auto a = ellipse_map(96, 96, {47.5, 47.5}, 30, 10, 0.2, 6);
  const auto b = ellipse_map(96, 96, {47.5, 47.5}, 30, 10, 0.2 + truth, 6);
  for (const auto& c : match_parts(a, b, 64).parts) {
    if (c.label != 6) continue;
    const auto t = estimate_part_transform(c);
    EXPECT_NEAR(t.affine.rotation_angle(), truth, 1.0 * std::numbers::pi / 180);
  }
}

TEST(EstimatePartTransform, ZeroAreaIsFlaggedIdentity) {
  PartCorrespondence pc;
  pc.label = 3;
  pc.source_area = 0;
  pc.target_area = 10;
  const auto t = estimate_part_transform(pc);
  EXPECT_TRUE(t.degenerate);
  EXPECT_EQ(t.affine, AffineParams::identity());
}
