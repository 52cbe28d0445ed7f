#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "softwarp/error.hpp"
#include "softwarp/losses.hpp"
#include "softwarp/sampler.hpp"
#include "softwarp/tensor.hpp"

namespace softwarp {

/// One rasterized body part: the capsule around the segment between two joints.
struct LimbPart {
  int label = 0;
  int joint_a = 0;
  int joint_b = 0;
  double half_width = 1.0;

  friend bool operator==(const LimbPart&, const LimbPart&) = default;
};

struct GateMode {
  enum class Kind { kOverlap, kConstant };
  Kind kind = Kind::kOverlap;
  double constant = 1.0;

  static GateMode overlap() noexcept { return {}; }
  static GateMode constant_gate(double c) noexcept { return {Kind::kConstant, c}; }
};

/// Part layout of the synthetic figure, in paint order (later parts overwrite earlier ones).
/// Distal segments come first so that each joint is covered by its parent's end cap.
/// Half-widths are given for a 192-pixel canvas and scaled by `canvas / 192`.
inline std::vector<LimbPart> default_parts(int canvas = 512) {
  std::vector<LimbPart> parts{
      {3, kRElbow, kRWrist, 6.0},        // right forearm
      {4, kLElbow, kLWrist, 6.0},        // left forearm
      {19, kRKnee, kRAnkle, 7.0},        // right shin
      {18, kLKnee, kLAnkle, 7.0},        // left shin
      {15, kRShoulder, kRElbow, 8.0},    // right upper arm
      {14, kLShoulder, kLElbow, 8.0},    // left upper arm
      {17, kRHip, kRKnee, 9.0},          // right thigh
      {16, kLHip, kLKnee, 9.0},          // left thigh
      {13, kNose, kNeck, 8.0},           // face
      {5, kRShoulder, kNeck, 10.0},      // right collar
      {6, kLShoulder, kNeck, 10.0},      // left collar
      {7, kNeck, kRHip, 12.0},           // right torso
      {10, kNeck, kLHip, 12.0},          // left torso
  };
  for (auto& p : parts) p.half_width *= canvas / 192.0;
  return parts;
}

struct PipelineConfig {
  int height = 512;
  int width = 512;
  std::vector<LimbPart> parts = default_parts();
  int tps_rows = 3;
  int tps_cols = 3;
  double tps_regularization = 1e-3;
  int landmarks = 64;
  GateMode gate;
  BorderMode border = BorderMode::kZeros;
  LossWeights weights;
  std::vector<double> alphas = {1.0, 1.0, 1.0};
  std::vector<double> perceptual_alphas = {1.0, 1.0, 1.0};

  /// Defaults for another canvas size, with part widths scaled to match.
  static PipelineConfig for_canvas(int height, int width) {
    PipelineConfig cfg;
    cfg.height = height;
    cfg.width = width;
    cfg.parts = default_parts(std::min(height, width));
    return cfg;
  }

  void validate() const {
    if (height <= 0 || width <= 0) throw InvalidArgument("PipelineConfig: image size must be positive");
    std::array<bool, kNumLabels> seen{};
    for (const auto& p : parts) {
      if (p.label < 0 || p.label >= kNumLabels) throw InvalidArgument("PipelineConfig: part label out of range");
      if (seen[static_cast<std::size_t>(p.label)]) throw InvalidArgument("PipelineConfig: duplicate part label");
      seen[static_cast<std::size_t>(p.label)] = true;
      if (!(p.half_width > 0.0)) throw InvalidArgument("PipelineConfig: half-width must be positive");
      if (p.joint_a < 0 || p.joint_a >= kNumJoints || p.joint_b < 0 || p.joint_b >= kNumJoints) {
        throw InvalidArgument("PipelineConfig: joint index out of range");
      }
    }
    if (tps_rows < 2 || tps_cols < 2) throw InvalidArgument("PipelineConfig: TPS grid needs at least 2x2 points");
    if (!(tps_regularization >= 0.0)) throw InvalidArgument("PipelineConfig: TPS regularization must be >= 0");
    if (landmarks < 1) throw InvalidArgument("PipelineConfig: landmark count must be positive");
    if (gate.kind == GateMode::Kind::kConstant && !(gate.constant >= 0.0 && gate.constant <= 1.0)) {
      throw InvalidArgument("PipelineConfig: constant gate must lie in [0, 1]");
    }
    weights.validate();
    PyramidExtractor{alphas};
    PyramidExtractor{perceptual_alphas};
  }
};

}  // namespace softwarp
