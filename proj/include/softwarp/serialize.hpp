#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "softwarp/config.hpp"
#include "softwarp/error.hpp"
#include "softwarp/evaluate.hpp"
#include "softwarp/part_transform.hpp"
#include "softwarp/render.hpp"
#include "softwarp/tensor.hpp"
#include "softwarp/warp_grid.hpp"
#include "softwarp/warping_block.hpp"

namespace softwarp {

using Json = nlohmann::json;

namespace detail {

// Runs a JSON reader and reports malformed documents as IoError.
template <class F>
auto parse_guard(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw IoError(std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

// ---- pose -------------------------------------------------------------------------------

/// Array of 18 {"x", "y", "visible"} objects in kJointNames order.
inline Json pose_to_json(const PoseKeypoints& pose) {
  Json out = Json::array();
  for (const auto& j : pose.joints()) out.push_back({{"x", j.x}, {"y", j.y}, {"visible", j.visible}});
  return out;
}

inline PoseKeypoints pose_from_json(const Json& j) {
  return detail::parse_guard("pose", [&] {
    if (!j.is_array()) throw IoError("pose: expected an array of 18 joints");
    std::vector<Joint> joints;
    for (const auto& e : j) joints.push_back({e.at("x").get<double>(), e.at("y").get<double>(), e.at("visible").get<bool>()});
    return PoseKeypoints(joints);
  });
}

// ---- transforms -------------------------------------------------------------------------

inline Json affine_to_json(const AffineParams& a) { return Json::array({a.a11, a.a12, a.tx, a.a21, a.a22, a.ty}); }

inline AffineParams affine_from_json(const Json& j) {
  return detail::parse_guard("affine", [&] {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 6) throw IoError("affine: expected [a11, a12, tx, a21, a22, ty]");
    AffineParams a{v[0], v[1], v[2], v[3], v[4], v[5]};
    if (!a.is_finite()) throw IoError("affine: non-finite coefficient");
    return a;
  });
}

inline Json tps_to_json(const TpsParams& t) {
  if (!is_uniform_grid(t)) throw InvalidArgument("tps_to_json: only control-grid splines are serializable");
  Json d = Json::array();
  for (const auto& p : t.target_displacements) d.push_back({p.x, p.y});
  Json out{{"rows", t.grid_rows}, {"cols", t.grid_cols}, {"displacements", d}, {"lambda", t.regularization}};
  if (t.frame) {
    out["frame"] = {{"cx", t.frame->cx}, {"cy", t.frame->cy}, {"sx", t.frame->sx}, {"sy", t.frame->sy}};
  }
  return out;
}

/// Refits the spline from its grid displacements; zero displacements give identity_tps.
inline TpsParams tps_from_json(const Json& j) {
  return detail::parse_guard("tps", [&] {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    const double lambda = j.value("lambda", 0.0);
    std::optional<NormalizedFrame> frame;
    if (j.contains("frame") && !j.at("frame").is_null()) {
      const auto& f = j.at("frame");
      frame = NormalizedFrame{f.at("cx").get<double>(), f.at("cy").get<double>(), f.at("sx").get<double>(),
                              f.at("sy").get<double>()};
    }
    std::vector<Point2> d;
    for (const auto& p : j.at("displacements")) {
      if (p.size() != 2) throw IoError("tps: displacement must be [dx, dy]");
      d.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    if (std::all_of(d.begin(), d.end(), [](Point2 p) { return p == Point2{}; }) &&
        d.size() == static_cast<std::size_t>(rows) * cols) {
      TpsParams t = identity_tps(rows, cols, frame);
      t.regularization = lambda;
      return t;
    }
    return fit_tps_grid(rows, cols, d, lambda, frame);
  });
}

inline Json transform_to_json(const PartTransform& t) {
  return {{"label", t.label},
          {"affine", affine_to_json(t.affine)},
          {"tps", tps_to_json(t.tps)},
          {"landmark_residual", t.landmark_residual},
          {"degenerate", t.degenerate}};
}

inline PartTransform transform_from_json(const Json& j) {
  return detail::parse_guard("transform", [&] {
    PartTransform t;
    t.label = j.value("label", 0);
    if (t.label < 0 || t.label >= kNumLabels) throw IoError("transform: label out of range");
    t.affine = affine_from_json(j.at("affine"));
    t.tps = j.contains("tps") ? tps_from_json(j.at("tps")) : identity_tps();
    t.landmark_residual = j.value("landmark_residual", 0.0);
    t.degenerate = j.value("degenerate", false);
    return t;
  });
}

inline Json transforms_to_json(std::span<const PartTransform> ts) {
  Json parts = Json::array();
  for (const auto& t : ts) parts.push_back(transform_to_json(t));
  return {{"parts", parts}};
}

/// Accepts {"parts": [...]}, a bare array, or a single transform object.
inline std::vector<PartTransform> transforms_from_json(const Json& j) {
  return detail::parse_guard("transforms", [&] {
    const Json* list = &j;
    if (j.is_object() && j.contains("parts")) list = &j.at("parts");
    std::vector<PartTransform> out;
    if (list->is_array()) {
      for (const auto& e : *list) out.push_back(transform_from_json(e));
    } else {
      out.push_back(transform_from_json(*list));
    }
    return out;
  });
}

// ---- config -----------------------------------------------------------------------------

inline Json config_to_json(const PipelineConfig& cfg) {
  Json parts = Json::array();
  for (const auto& p : cfg.parts) {
    parts.push_back({{"label", p.label}, {"joints", {p.joint_a, p.joint_b}}, {"half_width", p.half_width}});
  }
  Json gate = cfg.gate.kind == GateMode::Kind::kOverlap ? Json("overlap") : Json{{"constant", cfg.gate.constant}};
  return {{"height", cfg.height},
          {"width", cfg.width},
          {"parts", parts},
          {"tps_grid", {cfg.tps_rows, cfg.tps_cols}},
          {"tps_lambda", cfg.tps_regularization},
          {"landmarks", cfg.landmarks},
          {"gate", gate},
          {"border", cfg.border == BorderMode::kZeros ? "zeros" : "clamp"},
          {"lambda",
           {{"adv", cfg.weights.lambda_adv},
            {"pixel", cfg.weights.lambda_pixel},
            {"perceptual", cfg.weights.lambda_perceptual},
            {"ph", cfg.weights.lambda_ph}}},
          {"alphas", cfg.alphas},
          {"perceptual_alphas", cfg.perceptual_alphas}};
}

/// Missing keys keep their defaults. Without "parts", the default layout is scaled to the
/// configured canvas. The result is validated.
inline PipelineConfig config_from_json(const Json& j) {
  return detail::parse_guard("config", [&] {
    if (!j.is_object()) throw IoError("config: expected an object");
    PipelineConfig cfg;
    cfg.height = j.value("height", cfg.height);
    cfg.width = j.value("width", cfg.width);
    if (cfg.height <= 0 || cfg.width <= 0) throw InvalidArgument("PipelineConfig: image size must be positive");
    cfg.parts = default_parts(std::min(cfg.height, cfg.width));
    if (j.contains("parts")) {
      cfg.parts.clear();
      for (const auto& p : j.at("parts")) {
        const auto joints = p.at("joints").get<std::vector<int>>();
        if (joints.size() != 2) throw IoError("config: part joints must be a pair");
        cfg.parts.push_back({p.at("label").get<int>(), joints[0], joints[1], p.at("half_width").get<double>()});
      }
    }
    if (j.contains("tps_grid")) {
      const auto g = j.at("tps_grid").get<std::vector<int>>();
      if (g.size() != 2) throw IoError("config: tps_grid must be [rows, cols]");
      cfg.tps_rows = g[0];
      cfg.tps_cols = g[1];
    }
    cfg.tps_regularization = j.value("tps_lambda", cfg.tps_regularization);
    cfg.landmarks = j.value("landmarks", cfg.landmarks);
    if (j.contains("gate")) {
      const auto& g = j.at("gate");
      if (g.is_string() && g.get<std::string>() == "overlap") {
        cfg.gate = GateMode::overlap();
      } else if (g.is_object() && g.contains("constant")) {
        cfg.gate = GateMode::constant_gate(g.at("constant").get<double>());
      } else {
        throw IoError("config: gate must be \"overlap\" or {\"constant\": c}");
      }
    }
    if (j.contains("border")) {
      const auto b = j.at("border").get<std::string>();
      if (b == "zeros") {
        cfg.border = BorderMode::kZeros;
      } else if (b == "clamp") {
        cfg.border = BorderMode::kClamp;
      } else {
        throw IoError("config: border must be \"zeros\" or \"clamp\"");
      }
    }
    if (j.contains("lambda")) {
      const auto& l = j.at("lambda");
      cfg.weights.lambda_adv = l.value("adv", cfg.weights.lambda_adv);
      cfg.weights.lambda_pixel = l.value("pixel", cfg.weights.lambda_pixel);
      cfg.weights.lambda_perceptual = l.value("perceptual", cfg.weights.lambda_perceptual);
      cfg.weights.lambda_ph = l.value("ph", cfg.weights.lambda_ph);
    }
    if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("perceptual_alphas")) cfg.perceptual_alphas = j.at("perceptual_alphas").get<std::vector<double>>();
    cfg.validate();
    return cfg;
  });
}

// ---- reports ----------------------------------------------------------------------------

inline Json render_diagnostics_to_json(const RenderResult& r) {
  Json parts = Json::array();
  for (const auto& d : r.parts) {
    parts.push_back({{"label", d.label},
                     {"transform", transform_to_json(d.transform)},
                     {"warped_iou", d.warped_iou},
                     {"target_pixels", d.target_pixels},
                     {"hole_pixels", d.hole_pixels},
                     {"missing_in_condition", d.missing_in_condition}});
  }
  return {{"parts", parts}, {"omitted_labels", r.omitted_labels}, {"skipped_parts", r.skipped_parts}};
}

inline Json report_to_json(const FixtureReport& r) {
  Json parts = Json::array();
  for (const auto& p : r.parts) {
    parts.push_back({{"label", p.label},
                     {"rotation_error_deg", p.rotation_error_deg},
                     {"translation_error_px", p.translation_error_px},
                     {"warped_iou", p.warped_iou}});
  }
  return {{"seed", r.seed},
          {"ssim", r.ssim},
          {"mean_iou", r.mean_iou},
          {"losses", {{"adversarial", r.adversarial}, {"pixel", r.pixel}, {"perceptual", r.perceptual}, {"pyramid", r.pyramid}, {"total", r.total}}},
          {"max_rotation_error_deg", r.max_rotation_error_deg},
          {"max_translation_error_px", r.max_translation_error_px},
          {"parts", parts}};
}

inline Json evaluation_to_json(const EvaluationReport& r) {
  Json fixtures = Json::array();
  for (const auto& f : r.fixtures) fixtures.push_back(report_to_json(f));
  Json aggregate = report_to_json(r.aggregate);
  aggregate.erase("seed");
  aggregate.erase("parts");
  return {{"fixtures", fixtures}, {"aggregate", aggregate}};
}

// ---- binary grids -----------------------------------------------------------------------
// "SWGRID1\n" (or "SWGATE1\n"), an ASCII dimension line, then little-endian float32 samples
// in row-major order: (x, y) per pixel for grids, the channels per pixel for gates.

namespace detail {

inline void put_f32(std::ostream& out, double v) {
  const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  const char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                     static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
  out.write(b, 4);
}

inline double get_f32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("binary grid: truncated payload");
  const std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                          (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return static_cast<double>(std::bit_cast<float>(u));
}

inline std::vector<int> read_header(std::istream& in, const std::string& magic, std::size_t dims) {
  std::string line;
  if (!std::getline(in, line) || line + "\n" != magic) throw IoError("binary grid: bad magic, expected " + magic.substr(0, 7));
  if (!std::getline(in, line)) throw IoError("binary grid: missing dimension line");
  std::vector<int> out;
  std::size_t pos = 0;
  while (out.size() < dims) {
    std::size_t used = 0;
    try {
      out.push_back(std::stoi(line.substr(pos), &used));
    } catch (const std::exception&) {
      throw IoError("binary grid: malformed dimension line");
    }
    pos += used;
  }
  for (int d : out) {
    if (d <= 0) throw IoError("binary grid: dimensions must be positive");
  }
  return out;
}

}  // namespace detail

inline void write_grid(std::ostream& out, const WarpGrid& g) {
  out << "SWGRID1\n" << g.height() << ' ' << g.width() << '\n';
  for (const auto& p : g.coords()) {
    detail::put_f32(out, p.x);
    detail::put_f32(out, p.y);
  }
  if (!out) throw IoError("write_grid: stream error");
}

inline WarpGrid read_grid(std::istream& in) {
  const auto d = detail::read_header(in, "SWGRID1\n", 2);
  WarpGrid g(d[0], d[1]);
  for (int y = 0; y < d[0]; ++y) {
    for (int x = 0; x < d[1]; ++x) {
      const double gx = detail::get_f32(in);
      g.at(y, x) = {gx, detail::get_f32(in)};
    }
  }
  return g;
}

inline void write_gate(std::ostream& out, const GateMap& g) {
  out << "SWGATE1\n" << g.height() << ' ' << g.width() << ' ' << g.channels() << '\n';
  for (double v : g.values().data()) detail::put_f32(out, v);
  if (!out) throw IoError("write_gate: stream error");
}

inline GateMap read_gate(std::istream& in) {
  const auto d = detail::read_header(in, "SWGATE1\n", 3);
  std::vector<double> v(static_cast<std::size_t>(d[0]) * d[1] * d[2]);
  for (double& x : v) x = detail::get_f32(in);
  return GateMap(ImageTensor(d[0], d[1], d[2], std::move(v)));
}

}  // namespace softwarp
