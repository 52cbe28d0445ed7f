#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "softwarp/error.hpp"
#include "softwarp/tensor.hpp"
#include "softwarp/warp_grid.hpp"

namespace softwarp {

enum class BorderMode { kZeros, kClamp };

/// Gradients of bilinear_sample for every output pixel.
struct SamplerGradients {
  struct Tap {
    std::size_t source_pixel = 0;  // y * width + x in the input tensor
    double weight = 0.0;
  };
  int height = 0;
  int width = 0;
  int channels = 0;
  /// d output(y, x, c) / d input(tap.source_pixel, c), identical for every channel.
  std::vector<std::vector<Tap>> d_output_d_input;
  /// d output(y, x, c) / d grid(y, x), stored at [(y * width + x) * channels + c].
  std::vector<Point2> d_output_d_grid;
};

namespace detail {

struct Corners {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;
};

inline Corners corners_of(Point2 p) noexcept {
  const double fx0 = std::floor(p.x);
  const double fy0 = std::floor(p.y);
  return {static_cast<int>(fx0), static_cast<int>(fy0), p.x - fx0, p.y - fy0};
}

// Resolves a corner to a source pixel index under the border rule; -1 reads as zero.
inline long long resolve(int x, int y, int w, int h, BorderMode border) noexcept {
  if (border == BorderMode::kClamp) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
  } else if (x < 0 || y < 0 || x >= w || y >= h) {
    return -1;
  }
  return static_cast<long long>(y) * w + x;
}

// Grid coordinates this far outside the image are treated as fully outside. Keeps the
// integer conversion in corners_of well defined.
inline constexpr double kFarOutside = 1e9;

inline bool far_outside(Point2 p) noexcept {
  return !(std::abs(p.x) < kFarOutside && std::abs(p.y) < kFarOutside);
}

}  // namespace detail

/// Bilinear gather: output(y, x, c) = features sampled at grid(y, x).
///
/// The corner convention is floor(): a sample exactly on a lattice point takes its value and
/// its grid derivative from the cell to the right and below.
inline ImageTensor bilinear_sample(const ImageTensor& features, const WarpGrid& grid,
                                   BorderMode border = BorderMode::kZeros) {
  if (features.empty()) throw ShapeError("bilinear_sample: empty features");
  const int h = features.height();
  const int w = features.width();
  const int ch = features.channels();
  ImageTensor out(grid.height(), grid.width(), ch);
  const auto src = features.data();
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      Point2 p = grid.at(y, x);
      if (detail::far_outside(p)) {
        if (border == BorderMode::kZeros) continue;
        p = {std::clamp(p.x, -1.0, static_cast<double>(w)), std::clamp(p.y, -1.0, static_cast<double>(h))};
      }
      const auto k = detail::corners_of(p);
      const std::array<long long, 4> idx = {detail::resolve(k.x0, k.y0, w, h, border),
                                            detail::resolve(k.x0 + 1, k.y0, w, h, border),
                                            detail::resolve(k.x0, k.y0 + 1, w, h, border),
                                            detail::resolve(k.x0 + 1, k.y0 + 1, w, h, border)};
      const std::array<double, 4> wt = {(1.0 - k.fx) * (1.0 - k.fy), k.fx * (1.0 - k.fy),
                                        (1.0 - k.fx) * k.fy, k.fx * k.fy};
      for (int c = 0; c < ch; ++c) {
        // Zero-weight corners are skipped so lattice-aligned samples copy the input bitwise.
        double v = 0.0;
        bool first = true;
        for (int i = 0; i < 4; ++i) {
          if (idx[static_cast<std::size_t>(i)] < 0 || wt[static_cast<std::size_t>(i)] == 0.0) continue;
          const double term = wt[static_cast<std::size_t>(i)] *
                              src[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]) * ch + c];
          v = first ? term : v + term;
          first = false;
        }
        out.at(y, x, c) = v;
      }
    }
  }
  return out;
}

struct SampleWithGrad {
  ImageTensor output;
  SamplerGradients gradients;
};

/// bilinear_sample plus analytic derivatives with respect to features and grid coordinates.
inline SampleWithGrad bilinear_sample_with_grad(const ImageTensor& features, const WarpGrid& grid,
                                                BorderMode border = BorderMode::kZeros) {
  SampleWithGrad r{bilinear_sample(features, grid, border), {}};
  const int h = features.height();
  const int w = features.width();
  const int ch = features.channels();
  auto& g = r.gradients;
  g.height = grid.height();
  g.width = grid.width();
  g.channels = ch;
  g.d_output_d_input.resize(static_cast<std::size_t>(grid.height()) * grid.width());
  g.d_output_d_grid.assign(g.d_output_d_input.size() * static_cast<std::size_t>(ch), Point2{});
  const auto src = features.data();
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      const std::size_t o = static_cast<std::size_t>(y) * grid.width() + x;
      const Point2 p = grid.at(y, x);
      if (detail::far_outside(p)) continue;
      const auto k = detail::corners_of(p);
      const std::array<long long, 4> idx = {detail::resolve(k.x0, k.y0, w, h, border),
                                            detail::resolve(k.x0 + 1, k.y0, w, h, border),
                                            detail::resolve(k.x0, k.y0 + 1, w, h, border),
                                            detail::resolve(k.x0 + 1, k.y0 + 1, w, h, border)};
      const std::array<double, 4> wt = {(1.0 - k.fx) * (1.0 - k.fy), k.fx * (1.0 - k.fy),
                                        (1.0 - k.fx) * k.fy, k.fx * k.fy};
      auto& taps = g.d_output_d_input[o];
      for (int i = 0; i < 4; ++i) {
        const auto id = idx[static_cast<std::size_t>(i)];
        if (id < 0) continue;
        auto it = std::find_if(taps.begin(), taps.end(),
                               [&](const SamplerGradients::Tap& t) { return t.source_pixel == static_cast<std::size_t>(id); });
        if (it != taps.end()) {
          it->weight += wt[static_cast<std::size_t>(i)];
        } else {
          taps.push_back({static_cast<std::size_t>(id), wt[static_cast<std::size_t>(i)]});
        }
      }
      for (int c = 0; c < ch; ++c) {
        auto value = [&](int i) {
          const auto id = idx[static_cast<std::size_t>(i)];
          return id < 0 ? 0.0 : src[static_cast<std::size_t>(id) * ch + c];
        };
        const double v00 = value(0), v10 = value(1), v01 = value(2), v11 = value(3);
        g.d_output_d_grid[o * ch + c] = {(1.0 - k.fy) * (v10 - v00) + k.fy * (v11 - v01),
                                         (1.0 - k.fx) * (v01 - v00) + k.fx * (v11 - v10)};
      }
    }
  }
  return r;
}

}  // namespace softwarp
