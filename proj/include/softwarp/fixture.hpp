#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "softwarp/affine.hpp"
#include "softwarp/config.hpp"
#include "softwarp/part_transform.hpp"
#include "softwarp/rasterize.hpp"
#include "softwarp/render.hpp"
#include "softwarp/tensor.hpp"
#include "softwarp/tps.hpp"

namespace softwarp {

/// A synthetic condition/target pair with known per-part motion.
struct SynthFixture {
  std::uint64_t seed = 0;
  ImageTensor condition_image;
  PoseKeypoints condition_pose;
  PoseKeypoints target_pose;
  SegmentationMap condition_parsing;
  SegmentationMap target_parsing;
  /// One rigid transform per configured part (condition -> target), identity TPS.
  std::vector<PartTransform> ground_truth;
  /// The condition image rendered through the ground-truth transforms.
  ImageTensor target_image;
};

/// Articulation of the synthetic figure. Angles in radians; limb angles are relative to
/// the parent segment, so a zero vector is the canonical pose.
struct BodyPose {
  Point2 offset;  // translation of the neck from its canonical position
  double torso = 0.0;
  double head = 0.0;
  std::array<double, 2> upper_arm{};  // right, left
  std::array<double, 2> forearm{};
  std::array<double, 2> thigh{};
  std::array<double, 2> shin{};
};

struct FixtureOptions {
  /// Target pose equals the condition pose (every transform is the identity).
  bool same_pose = false;
  int max_attempts = 2000;
  /// Minimum angle between any part axis and the pixel axes, in degrees. Edges nearly
  /// parallel to a pixel row or column alias coherently (whole rows flip at once), which
  /// would make the rasterized masks disagree with the exact motions.
  double axis_clearance_deg = 3.0;
};

namespace detail {

// Deterministic uniform draws: the bit pattern of mt19937_64 is fixed by the standard,
// the distribution objects of the standard library are not.
class FixtureRng {
 public:
  explicit FixtureRng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 engine_;
};

inline double deg(double d) noexcept { return d * std::numbers::pi / 180.0; }

inline Point2 rotate(Point2 v, double a) noexcept {
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Canonical skeleton on a 192-pixel canvas, scaled to the configured size.
struct Skeleton {
  double scale = 1.0;
  Point2 neck;
  double head_length = 32.0;
  Point2 shoulder{31.0, 24.0};  // offset of the left shoulder from the neck; right is mirrored
  Point2 hip{16.0, 62.0};
  double upper_arm = 31.0;
  double forearm = 29.0;
  double thigh = 34.0;
  double shin = 31.0;
  double arm_droop = deg(35.0);  // below horizontal
  double leg_splay = deg(3.0);   // away from the body midline

  explicit Skeleton(const PipelineConfig& cfg)
      : scale(std::min(cfg.height, cfg.width) / 192.0),
        neck{0.5 * (cfg.width - 1), 0.5 * (cfg.height - 192.0 * scale) + 46.0 * scale} {}
};

inline PoseKeypoints pose_from_body(const Skeleton& sk, const BodyPose& b) {
  std::array<Joint, kNumJoints> j{};
  const double s = sk.scale;
  const Point2 neck = sk.neck + b.offset;
  auto at = [&](Point2 local) { return neck + rotate(s * local, b.torso); };
  auto put = [&](int idx, Point2 p) { j[static_cast<std::size_t>(idx)] = {p.x, p.y, true}; };

  put(kNeck, neck);
  const double up = -std::numbers::pi / 2.0;  // screen "up" direction angle
  const double head_dir = up + b.torso + b.head;
  const Point2 nose = neck + s * sk.head_length * Point2{std::cos(head_dir), std::sin(head_dir)};
  put(kNose, nose);
  auto head_local = [&](Point2 v) { return nose + rotate(s * v, b.torso + b.head); };
  put(kREye, head_local({-5.0, -3.0}));
  put(kLEye, head_local({5.0, -3.0}));
  put(kREar, head_local({-10.0, 2.0}));
  put(kLEar, head_local({10.0, 2.0}));

  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? -1.0 : 1.0;  // right side sits at smaller x
    const int sh = side == 0 ? kRShoulder : kLShoulder;
    const int el = side == 0 ? kRElbow : kLElbow;
    const int wr = side == 0 ? kRWrist : kLWrist;
    const int hp = side == 0 ? kRHip : kLHip;
    const int kn = side == 0 ? kRKnee : kLKnee;
    const int an = side == 0 ? kRAnkle : kLAnkle;
    const auto i = static_cast<std::size_t>(side);

    const Point2 shoulder = at({sign * sk.shoulder.x, sk.shoulder.y});
    // Arm direction: outward and drooping; positive angles swing the arm downwards on both sides.
    const double arm0 = side == 0 ? std::numbers::pi - sk.arm_droop : sk.arm_droop;
    const double arm = arm0 + b.torso + sign * b.upper_arm[i];
    const Point2 elbow = shoulder + s * sk.upper_arm * Point2{std::cos(arm), std::sin(arm)};
    const double fore = arm + sign * b.forearm[i];
    const Point2 wrist = elbow + s * sk.forearm * Point2{std::cos(fore), std::sin(fore)};
    put(sh, shoulder);
    put(el, elbow);
    put(wr, wrist);

    const Point2 hip = at({sign * sk.hip.x, sk.hip.y});
    const double leg = std::numbers::pi / 2.0 - sign * sk.leg_splay + b.torso + sign * b.thigh[i];
    const Point2 knee = hip + s * sk.thigh * Point2{std::cos(leg), std::sin(leg)};
    const double shin = leg + sign * b.shin[i];
    const Point2 ankle = knee + s * sk.shin * Point2{std::cos(shin), std::sin(shin)};
    put(hp, hip);
    put(kn, knee);
    put(an, ankle);
  }
  return PoseKeypoints(j);
}

inline BodyPose draw_condition(FixtureRng& rng) {
  BodyPose b;
  b.offset = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
  b.torso = deg(rng.uniform(-3.0, 3.0));
  b.head = deg(rng.uniform(-3.0, 3.0));
  for (std::size_t i = 0; i < 2; ++i) {
    b.upper_arm[i] = deg(rng.uniform(-5.0, 5.0));
    b.forearm[i] = deg(rng.uniform(-5.0, 5.0));
    b.thigh[i] = deg(rng.uniform(-4.0, 4.0));
    b.shin[i] = deg(rng.uniform(-4.0, 4.0));
  }
  return b;
}

inline BodyPose perturb(const BodyPose& c, FixtureRng& rng) {
  BodyPose b = c;
  b.offset = b.offset + Point2{rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0)};
  b.torso += deg(rng.uniform(-6.0, 6.0));
  b.head += deg(rng.uniform(-10.0, 10.0));
  for (std::size_t i = 0; i < 2; ++i) {
    b.upper_arm[i] += deg(rng.uniform(-12.0, 12.0));
    b.forearm[i] += deg(rng.uniform(-20.0, 20.0));
    b.thigh[i] += deg(rng.uniform(-12.0, 12.0));
    b.shin[i] += deg(rng.uniform(-15.0, 15.0));
  }
  return b;
}

inline double segment_distance(Point2 a, Point2 b, Point2 c, Point2 d) noexcept {
  auto orient = [](Point2 p, Point2 q, Point2 r) { return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x); };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0))) return 0.0;
  return std::min({distance_to_segment(a, c, d), distance_to_segment(b, c, d), distance_to_segment(c, a, b),
                   distance_to_segment(d, a, b)});
}

inline bool torso_joint(int j) noexcept {
  return j == kNeck || j == kRShoulder || j == kLShoulder || j == kRHip || j == kLHip;
}

// A pose is usable when every capsule lies inside the canvas and parts that are not
// joined at a shared joint (or rigidly attached to the torso) keep a clear gap, so the
// only occlusions are the end caps at joints. Part axes also keep `clearance` radians away
// from the pixel axes.
inline bool pose_is_clean(const PoseKeypoints& pose, const PipelineConfig& cfg, double clearance = 0.0) {
  constexpr double margin = 1.0;
  for (const auto& p : cfg.parts) {
    const double a = std::atan2(pose[p.joint_b].y - pose[p.joint_a].y, pose[p.joint_b].x - pose[p.joint_a].x);
    const double off = std::remainder(a, 0.5 * std::numbers::pi);
    if (std::abs(off) < clearance) return false;
  }
  for (const auto& p : cfg.parts) {
    for (int j : {p.joint_a, p.joint_b}) {
      const Joint& q = pose[j];
      if (q.x - p.half_width < margin || q.y - p.half_width < margin || q.x + p.half_width > cfg.width - 1 - margin ||
          q.y + p.half_width > cfg.height - 1 - margin) {
        return false;
      }
    }
  }
  for (std::size_t i = 0; i < cfg.parts.size(); ++i) {
    for (std::size_t k = i + 1; k < cfg.parts.size(); ++k) {
      const auto& p = cfg.parts[i];
      const auto& q = cfg.parts[k];
      const bool shared = p.joint_a == q.joint_a || p.joint_a == q.joint_b || p.joint_b == q.joint_a || p.joint_b == q.joint_b;
      const bool rigid = torso_joint(p.joint_a) && torso_joint(p.joint_b) && torso_joint(q.joint_a) && torso_joint(q.joint_b);
      if (shared || rigid) continue;
      auto pt = [&](int j) { return Point2{pose[j].x, pose[j].y}; };
      const double d = segment_distance(pt(p.joint_a), pt(p.joint_b), pt(q.joint_a), pt(q.joint_b));
      if (d <= p.half_width + q.half_width + margin) return false;
    }
  }
  return true;
}

// Rigid motion carrying segment (a0, b0) onto (a1, b1); the similarity scale is kept so
// pairs of joints that are not one bone still map exactly.
inline AffineParams segment_motion(Point2 a0, Point2 b0, Point2 a1, Point2 b1) {
  const Point2 u = b0 - a0;
  const Point2 v = b1 - a1;
  const double n = squared_norm(u);
  if (!(n > 0.0)) return AffineParams::translation(a1.x - a0.x, a1.y - a0.y);
  const double c = (u.x * v.x + u.y * v.y) / n;
  const double s = (u.x * v.y - u.y * v.x) / n;
  AffineParams out{c, -s, 0.0, s, c, 0.0};
  const Point2 m = out.apply_linear(a0);
  out.tx = a1.x - m.x;
  out.ty = a1.y - m.y;
  return out;
}

inline double quantize(double v) noexcept { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

// Flat per-label colors plus a smooth noise field; every sample is a multiple of 1/255 so
// 8-bit PNG round trips are lossless.
inline ImageTensor texture(const SegmentationMap& seg, FixtureRng& rng) {
  const int h = seg.height();
  const int w = seg.width();
  std::array<std::array<double, 3>, kNumLabels> colors{};
  for (auto& c : colors) {
    for (auto& v : c) v = rng.uniform(0.15, 0.85);
  }
  constexpr int cell = 8;
  const int gh = h / cell + 2;
  const int gw = w / cell + 2;
  std::vector<double> coarse(static_cast<std::size_t>(gh) * gw * 3);
  for (auto& v : coarse) v = rng.uniform(-0.1, 0.1);
  ImageTensor img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int cy = y / cell, cx = x / cell;
      const double fy = static_cast<double>(y % cell) / cell;
      const double fx = static_cast<double>(x % cell) / cell;
      for (int c = 0; c < 3; ++c) {
        auto g = [&](int yy, int xx) { return coarse[(static_cast<std::size_t>(yy) * gw + xx) * 3 + c]; };
        const double n = (1 - fy) * ((1 - fx) * g(cy, cx) + fx * g(cy, cx + 1)) +
                         fy * ((1 - fx) * g(cy + 1, cx) + fx * g(cy + 1, cx + 1));
        const double fine = rng.uniform(-0.02, 0.02);
        img.at(y, x, c) = quantize(colors[seg.at(y, x)][static_cast<std::size_t>(c)] + n + fine);
      }
    }
  }
  return img;
}

}  // namespace detail

/// Deterministic synthetic pair: a canonical figure with bounded random articulation for the
/// condition, a further bounded perturbation for the target, a textured condition image and
/// the exact per-part rigid motions between them.
inline SynthFixture make_fixture(std::uint64_t seed, const PipelineConfig& cfg, const FixtureOptions& opts = {}) {
  cfg.validate();
  detail::FixtureRng rng(seed);
  const detail::Skeleton sk(cfg);
  const double clearance = detail::deg(opts.axis_clearance_deg);

  SynthFixture f;
  f.seed = seed;
  bool ok = false;
  for (int attempt = 0; attempt < opts.max_attempts && !ok; ++attempt) {
    const BodyPose cond = detail::draw_condition(rng);
    f.condition_pose = detail::pose_from_body(sk, cond);
    if (!detail::pose_is_clean(f.condition_pose, cfg, clearance)) continue;
    for (int t = 0; t < 50 && !ok; ++t) {
      f.target_pose = opts.same_pose ? f.condition_pose : detail::pose_from_body(sk, detail::perturb(cond, rng));
      ok = detail::pose_is_clean(f.target_pose, cfg, clearance);
    }
  }
  if (!ok) throw InvalidArgument("make_fixture: no admissible pose for this configuration");

  f.condition_parsing = rasterize_parsing(f.condition_pose, cfg);
  f.target_parsing = rasterize_parsing(f.target_pose, cfg);
  f.condition_image = detail::texture(f.condition_parsing, rng);

  for (const auto& p : cfg.parts) {
    PartTransform t;
    t.label = p.label;
    auto pt = [](const PoseKeypoints& pose, int j) { return Point2{pose[j].x, pose[j].y}; };
    t.affine = opts.same_pose ? AffineParams::identity()
                              : detail::segment_motion(pt(f.condition_pose, p.joint_a), pt(f.condition_pose, p.joint_b),
                                                       pt(f.target_pose, p.joint_a), pt(f.target_pose, p.joint_b));
    t.tps = identity_tps(cfg.tps_rows, cfg.tps_cols);
    t.tps.regularization = cfg.tps_regularization;
    f.ground_truth.push_back(std::move(t));
  }
  f.target_image =
      render_with_transforms(f.condition_image, f.condition_parsing, f.target_parsing, f.ground_truth, cfg).image;
  return f;
}

}  // namespace softwarp
