#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "softwarp/error.hpp"
#include "softwarp/sampler.hpp"
#include "softwarp/tensor.hpp"
#include "softwarp/warp_grid.hpp"

namespace softwarp {

/// Soft gate with values in [0, 1]; one channel (broadcast) or one per feature channel.
class GateMap {
 public:
  GateMap() = default;

  /// Throws ShapeError on values outside [0, 1] unless `clamp` is set.
  explicit GateMap(ImageTensor values, bool clamp = false) : values_(std::move(values)) {
    for (double& v : values_.data()) {
      if (v >= 0.0 && v <= 1.0) continue;
      if (!clamp) throw ShapeError("GateMap: value outside [0, 1]");
      v = std::clamp(v, 0.0, 1.0);
    }
  }

  static GateMap constant(int height, int width, double value) {
    return GateMap(ImageTensor(height, width, 1, value));
  }

  int height() const noexcept { return values_.height(); }
  int width() const noexcept { return values_.width(); }
  int channels() const noexcept { return values_.channels(); }
  const ImageTensor& values() const noexcept { return values_; }

  double at(int y, int x, int c) const noexcept { return values_.at(y, x, values_.channels() == 1 ? 0 : c); }

 private:
  ImageTensor values_;
};

/// output = phi + gate ⊙ warp(residual, grid).
///
/// The gate multiplies the residual after it has been resampled through the grid. Where the
/// gate is exactly 0 the output copies phi bitwise.
inline ImageTensor warping_block(const ImageTensor& phi, const ImageTensor& residual, const WarpGrid& grid,
                                 const GateMap& gate, BorderMode border = BorderMode::kZeros) {
  if (!phi.same_shape(residual)) throw ShapeError("warping_block: phi and residual shapes differ");
  if (grid.height() != phi.height() || grid.width() != phi.width()) {
    throw ShapeError("warping_block: grid does not match feature dimensions");
  }
  if (gate.height() != phi.height() || gate.width() != phi.width() ||
      (gate.channels() != 1 && gate.channels() != phi.channels())) {
    throw ShapeError("warping_block: gate is not broadcastable over the features");
  }
  const ImageTensor warped = bilinear_sample(residual, grid, border);
  ImageTensor out = phi;
  for (int y = 0; y < phi.height(); ++y) {
    for (int x = 0; x < phi.width(); ++x) {
      for (int c = 0; c < phi.channels(); ++c) {
        const double e = gate.at(y, x, c);
        if (e == 0.0) continue;
        out.at(y, x, c) = phi.at(y, x, c) + e * warped.at(y, x, c);
      }
    }
  }
  return out;
}

/// Gate that is high where the warped source part and the target part agree:
/// gate = warped_mask * target_mask.
inline GateMap gate_from_overlap(const ImageTensor& warped_part_mask, const ImageTensor& target_part_mask) {
  if (!warped_part_mask.same_shape(target_part_mask)) throw ShapeError("gate_from_overlap: mask shapes differ");
  std::vector<double> values(warped_part_mask.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double a = warped_part_mask.data()[i];
    const double b = target_part_mask.data()[i];
    if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) throw ShapeError("gate_from_overlap: mask value outside [0, 1]");
    values[i] = a * b;
  }
  return GateMap(ImageTensor(warped_part_mask.height(), warped_part_mask.width(), warped_part_mask.channels(),
                             std::move(values)));
}

}  // namespace softwarp
