#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "softwarp/error.hpp"
#include "softwarp/point.hpp"

namespace softwarp {

inline constexpr int kNumLabels = 20;
inline constexpr int kNumJoints = 18;
inline constexpr double kPoseRadius = 4.0;

/// Dense height x width x channels grid of 64-bit samples, row-major in (y, x, c) order.
///
/// Construction rejects non-finite samples. Element access through at() is unchecked
/// beyond a debug assertion, the same as std::vector::operator[].
class ImageTensor {
 public:
  ImageTensor() = default;

  ImageTensor(int height, int width, int channels, double fill = 0.0)
      : height_(height), width_(width), channels_(channels) {
    check_dims(height, width, channels);
    if (!std::isfinite(fill)) throw ShapeError("ImageTensor: non-finite fill value");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  ImageTensor(int height, int width, int channels, std::vector<double> data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    check_dims(height, width, channels);
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
      throw ShapeError("ImageTensor: data length does not match height*width*channels");
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw ShapeError("ImageTensor: non-finite sample");
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  double& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  double at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  static void check_dims(int h, int w, int c) {
    if (h <= 0 || w <= 0 || c <= 0) throw ShapeError("ImageTensor: dimensions must be positive");
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// H x W grid of part labels in [0, kNumLabels).
class SegmentationMap {
 public:
  SegmentationMap() = default;

  SegmentationMap(int height, int width, std::uint8_t fill = 0)
      : height_(height), width_(width) {
    if (height <= 0 || width <= 0) throw ShapeError("SegmentationMap: dimensions must be positive");
    check_label(fill);
    labels_.assign(static_cast<std::size_t>(height) * width, fill);
  }

  SegmentationMap(int height, int width, std::vector<std::uint8_t> labels)
      : height_(height), width_(width), labels_(std::move(labels)) {
    if (height <= 0 || width <= 0) throw ShapeError("SegmentationMap: dimensions must be positive");
    if (labels_.size() != static_cast<std::size_t>(height) * width) {
      throw ShapeError("SegmentationMap: label count does not match height*width");
    }
    for (auto l : labels_) check_label(l);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::uint8_t at(int y, int x) const noexcept {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  void set(int y, int x, int label) {
    check_label(label);
    labels_[static_cast<std::size_t>(y) * width_ + x] = static_cast<std::uint8_t>(label);
  }

  std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  bool same_shape(const SegmentationMap& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  /// 1.0 where the label matches, 0.0 elsewhere; single channel.
  ImageTensor mask(int label) const {
    ImageTensor out(height_, width_, 1);
    for (std::size_t i = 0; i < labels_.size(); ++i) out.data()[i] = labels_[i] == label ? 1.0 : 0.0;
    return out;
  }

  std::size_t count(int label) const noexcept {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
  }

  friend bool operator==(const SegmentationMap&, const SegmentationMap&) = default;

 private:
  static void check_label(int l) {
    if (l < 0 || l >= kNumLabels) throw ShapeError("SegmentationMap: label out of range 0..19");
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> labels_;
};

struct Joint {
  double x = 0.0;
  double y = 0.0;
  bool visible = false;

  friend bool operator==(const Joint&, const Joint&) = default;
};

/// Joint order used for the 18 pose channels (the COCO/OpenPose 18-keypoint layout).
inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "nose",       "neck",      "r_shoulder", "r_elbow", "r_wrist", "l_shoulder",
    "l_elbow",    "l_wrist",   "r_hip",      "r_knee",  "r_ankle", "l_hip",
    "l_knee",     "l_ankle",   "r_eye",      "l_eye",   "r_ear",   "l_ear"};

enum JointIndex : int {
  kNose = 0, kNeck, kRShoulder, kRElbow, kRWrist, kLShoulder, kLElbow, kLWrist,
  kRHip, kRKnee, kRAnkle, kLHip, kLKnee, kLAnkle, kREye, kLEye, kREar, kLEar
};

class PoseKeypoints {
 public:
  PoseKeypoints() = default;

  explicit PoseKeypoints(std::span<const Joint> joints) {
    if (joints.size() != kNumJoints) {
      throw ShapeError("PoseKeypoints: expected 18 joints, got " + std::to_string(joints.size()));
    }
    std::copy(joints.begin(), joints.end(), joints_.begin());
  }

  const Joint& operator[](int i) const noexcept { return joints_[static_cast<std::size_t>(i)]; }
  Joint& operator[](int i) noexcept { return joints_[static_cast<std::size_t>(i)]; }
  std::span<const Joint, kNumJoints> joints() const noexcept { return joints_; }

  PoseKeypoints translated(Point2 offset) const {
    PoseKeypoints out = *this;
    for (auto& j : out.joints_) {
      j.x += offset.x;
      j.y += offset.y;
    }
    return out;
  }

  friend bool operator==(const PoseKeypoints&, const PoseKeypoints&) = default;

 private:
  std::array<Joint, kNumJoints> joints_{};
};

/// One binary channel per joint: 1.0 within kPoseRadius (inclusive) of a visible joint.
inline ImageTensor encode_pose(const PoseKeypoints& pose, int height, int width) {
  if (height <= 0 || width <= 0) throw ShapeError("encode_pose: dimensions must be positive");
  ImageTensor out(height, width, kNumJoints);
  const double r2 = kPoseRadius * kPoseRadius;
  for (int k = 0; k < kNumJoints; ++k) {
    const Joint& j = pose[k];
    if (!j.visible) continue;
    if (!(j.x >= 0.0 && j.x <= width - 1.0 && j.y >= 0.0 && j.y <= height - 1.0)) {
      throw InvalidArgument("encode_pose: visible joint " + std::string(kJointNames[k]) +
                            " lies outside the image");
    }
    const int y0 = std::max(0, static_cast<int>(std::floor(j.y - kPoseRadius)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(j.y + kPoseRadius)));
    const int x0 = std::max(0, static_cast<int>(std::floor(j.x - kPoseRadius)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(j.x + kPoseRadius)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - j.x;
        const double dy = y - j.y;
        if (dx * dx + dy * dy <= r2) out.at(y, x, k) = 1.0;
      }
    }
  }
  return out;
}

inline ImageTensor encode_parsing(const SegmentationMap& seg) {
  ImageTensor out(seg.height(), seg.width(), kNumLabels);
  for (int y = 0; y < seg.height(); ++y) {
    for (int x = 0; x < seg.width(); ++x) out.at(y, x, seg.at(y, x)) = 1.0;
  }
  return out;
}

/// Per-pixel argmax; ties go to the lowest channel.
inline SegmentationMap decode_parsing(const ImageTensor& t) {
  if (t.channels() != kNumLabels) {
    throw ShapeError("decode_parsing: expected 20 channels, got " + std::to_string(t.channels()));
  }
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(t.height()) * t.width());
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      int best = 0;
      for (int c = 1; c < kNumLabels; ++c) {
        if (t.at(y, x, c) > t.at(y, x, best)) best = c;
      }
      labels[static_cast<std::size_t>(y) * t.width() + x] = static_cast<std::uint8_t>(best);
    }
  }
  return SegmentationMap(t.height(), t.width(), std::move(labels));
}

/// Pairwise (cascade) summation in index order; the reduction tree depends only on length.
inline double pairwise_sum(std::span<const double> v) noexcept {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace softwarp
