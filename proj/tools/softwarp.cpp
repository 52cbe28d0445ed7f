#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "softwarp/fixture_io.hpp"
#include "softwarp/png_io.hpp"
#include "softwarp/serialize.hpp"
#include "softwarp/softwarp.hpp"

namespace fs = std::filesystem;
using namespace softwarp;

namespace {

PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  return config_from_json(detail::read_json_file(path));
}

void emit(const Json& j) { std::cout << j.dump(2) << '\n'; }

int fail(const std::string& message, int code) {
  std::cout << Json{{"error", message}}.dump() << '\n';
  return code;
}

std::vector<int> present_labels(const SegmentationMap& a, const SegmentationMap& b) {
  std::vector<int> out;
  for (int l = 0; l < kNumLabels; ++l) {
    if (a.count(l) > 0 || b.count(l) > 0) out.push_back(l);
  }
  return out;
}

// Single-channel image whose samples are all integer labels k/255 with k < 20.
std::optional<SegmentationMap> as_segmentation(const ImageTensor& img) {
  if (img.channels() != 1) return std::nullopt;
  std::vector<std::uint8_t> labels(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double k = img.data()[i] * 255.0;
    if (k != std::round(k) || k >= kNumLabels) return std::nullopt;
    labels[i] = static_cast<std::uint8_t>(k);
  }
  return SegmentationMap(img.height(), img.width(), std::move(labels));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"softwarp: part-wise affine + TPS warping with soft-gated compositing"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;

  auto* fixture = app.add_subcommand("fixture", "write a synthetic condition/target fixture");
  std::uint64_t seed = 0;
  bool same_pose = false;
  fixture->add_option("--seed", seed, "fixture seed")->required();
  fixture->add_option("--out", out, "output directory")->required();
  fixture->add_option("--config", config_path, "pipeline config JSON");
  fixture->add_flag("--same-pose", same_pose, "target pose equals the condition pose");

  auto* parse = app.add_subcommand("parse", "rasterize a pose into a part segmentation");
  std::string pose_path;
  parse->add_option("--pose", pose_path, "pose JSON")->required();
  parse->add_option("--config", config_path, "pipeline config JSON");
  parse->add_option("--out", out, "segmentation PNG")->required();

  auto* estimate = app.add_subcommand("estimate", "estimate per-part transforms between two segmentations");
  std::string cond_seg, target_seg;
  estimate->add_option("--cond-seg", cond_seg, "condition segmentation PNG")->required();
  estimate->add_option("--target-seg", target_seg, "target segmentation PNG")->required();
  estimate->add_option("--config", config_path, "pipeline config JSON");
  estimate->add_option("--out", out, "transforms JSON")->required();

  auto* warp = app.add_subcommand("warp", "warp an image through one part transform");
  std::string image_path, transforms_path, grid_out, border = "zeros";
  int label = -1;
  warp->add_option("--image", image_path, "input PNG")->required();
  warp->add_option("--transforms", transforms_path, "transforms JSON")->required();
  warp->add_option("--label", label, "part to use when the file holds several");
  warp->add_option("--border", border, "zeros or clamp")->check(CLI::IsMember({"zeros", "clamp"}));
  warp->add_option("--grid-out", grid_out, "also write the warp grid (SWGRID1 binary)");
  warp->add_option("--out", out, "warped PNG")->required();

  auto* render_cmd = app.add_subcommand("render", "render a fixture's target pose from its condition image");
  std::string fixture_dir;
  render_cmd->add_option("--fixture", fixture_dir, "fixture directory")->required();
  render_cmd->add_option("--config", config_path, "pipeline config JSON");
  render_cmd->add_option("--out", out, "output directory")->required();

  auto* metrics = app.add_subcommand("metrics", "SSIM and mean IoU of two PNGs");
  std::string a_path, b_path, seg_a, seg_b;
  metrics->add_option("--a", a_path, "first PNG")->required();
  metrics->add_option("--b", b_path, "second PNG")->required();
  metrics->add_option("--seg-a", seg_a, "segmentation for mean IoU (defaults to --a when it is a label map)");
  metrics->add_option("--seg-b", seg_b, "segmentation for mean IoU (defaults to --b when it is a label map)");

  auto* losses = app.add_subcommand("losses", "loss terms between a generated and a target PNG");
  std::string generated_path, target_path;
  losses->add_option("--generated", generated_path, "generated PNG")->required();
  losses->add_option("--target", target_path, "target PNG")->required();
  losses->add_option("--config", config_path, "pipeline config JSON (weights and alphas)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate the pipeline on seeded fixtures");
  int seeds = 20;
  evaluate_cmd->add_option("--seeds", seeds, "fixture count (seeds 1..N)")->check(CLI::PositiveNumber);
  evaluate_cmd->add_option("--config", config_path, "pipeline config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(e.what(), 2);
  }

  try {
    const PipelineConfig cfg = load_config(config_path);

    if (*fixture) {
      FixtureOptions opts;
      opts.same_pose = same_pose;
      const SynthFixture f = make_fixture(seed, cfg, opts);
      save_fixture(out, f);
      emit({{"seed", seed}, {"out", out}, {"height", cfg.height}, {"width", cfg.width}, {"parts", f.ground_truth.size()}});
    } else if (*parse) {
      const PoseKeypoints pose = pose_from_json(detail::read_json_file(pose_path));
      std::vector<int> skipped;
      const SegmentationMap seg = rasterize_parsing(pose, cfg, &skipped);
      write_segmentation_png(out, seg);
      Json counts = Json::object();
      for (int l = 0; l < kNumLabels; ++l) {
        if (seg.count(l) > 0) counts[std::to_string(l)] = seg.count(l);
      }
      emit({{"out", out}, {"height", seg.height()}, {"width", seg.width()}, {"pixels", counts}, {"skipped_parts", skipped}});
    } else if (*estimate) {
      const SegmentationMap a = read_segmentation_png(cond_seg);
      const SegmentationMap b = read_segmentation_png(target_seg);
      const PartMatching m = match_parts(a, b, cfg.landmarks);
      const auto ts = estimate_transforms(m, cfg);
      Json doc = transforms_to_json(ts);
      doc["omitted_labels"] = m.omitted_labels;
      detail::write_json_file(out, doc);
      Json summary = Json::array();
      for (const auto& t : ts) {
        summary.push_back({{"label", t.label}, {"rotation_deg", t.affine.rotation_angle() * 180.0 / std::numbers::pi},
                           {"translation", {t.affine.tx, t.affine.ty}}, {"landmark_residual", t.landmark_residual},
                           {"degenerate", t.degenerate}});
      }
      emit({{"out", out}, {"parts", summary}, {"omitted_labels", m.omitted_labels}});
    } else if (*warp) {
      const ImageTensor img = read_png(image_path);
      const auto ts = transforms_from_json(detail::read_json_file(transforms_path));
      const PartTransform* chosen = nullptr;
      for (const auto& t : ts) {
        if (label < 0 ? ts.size() == 1 : t.label == label) chosen = &t;
      }
      if (!chosen) {
        throw InvalidArgument(label < 0 ? "warp: the transforms file holds several parts, pick one with --label"
                                        : "warp: no transform for label " + std::to_string(label));
      }
      const WarpGrid grid = part_grid(*chosen, img.height(), img.width());
      const ImageTensor warped = bilinear_sample(img, grid, border == "clamp" ? BorderMode::kClamp : BorderMode::kZeros);
      write_png(out, warped);
      if (!grid_out.empty()) {
        std::ofstream g(grid_out, std::ios::binary);
        if (!g) throw IoError("cannot write " + grid_out);
        write_grid(g, grid);
      }
      emit({{"out", out}, {"label", chosen->label}, {"height", img.height()}, {"width", img.width()}});
    } else if (*render_cmd) {
      const SynthFixture f = load_fixture(fixture_dir);
      if (f.condition_image.height() != cfg.height || f.condition_image.width() != cfg.width) {
        throw ShapeError("render: fixture size differs from the config canvas");
      }
      const RenderResult r = render({f.condition_image, f.condition_parsing, f.target_pose, std::nullopt}, cfg);
      fs::create_directories(out);
      write_png(fs::path(out) / "rendered.png", r.image);
      write_segmentation_png(fs::path(out) / "parsing.png", r.parsing);
      detail::write_json_file(fs::path(out) / "diagnostics.json", render_diagnostics_to_json(r));
      std::vector<double> ious;
      for (const auto& d : r.parts) {
        if (d.label != 0 && !d.missing_in_condition) ious.push_back(d.warped_iou);
      }
      Json summary{{"out", out},
                   {"mean_warped_iou", ious.empty() ? 1.0 : pairwise_sum(ious) / static_cast<double>(ious.size())},
                   {"omitted_labels", r.omitted_labels},
                   {"skipped_parts", r.skipped_parts}};
      if (!f.target_image.empty() && f.target_image.same_shape(r.image)) {
        summary["ssim_vs_target"] = ssim(r.image, f.target_image);
        summary["pixel_loss_vs_target"] = pixel_loss(r.image, f.target_image);
      }
      emit(summary);
    } else if (*metrics) {
      const ImageTensor a = read_png(a_path);
      const ImageTensor b = read_png(b_path);
      Json result{{"ssim", ssim(a, b)}, {"mean_iou", nullptr}};
      const auto sa = seg_a.empty() ? as_segmentation(a) : std::optional(read_segmentation_png(seg_a));
      const auto sb = seg_b.empty() ? as_segmentation(b) : std::optional(read_segmentation_png(seg_b));
      if (sa && sb) {
        const auto labels = present_labels(*sa, *sb);
        result["mean_iou"] = mean_iou(*sa, *sb, labels);
      }
      emit(result);
    } else if (*losses) {
      const ImageTensor g = read_png(generated_path);
      const ImageTensor t = read_png(target_path);
      const double pixel = pixel_loss(g, t);
      const double perceptual = perceptual_loss(g, t, PyramidExtractor(cfg.perceptual_alphas));
      const double pyramid = pyramid_loss(g, t, PyramidExtractor(cfg.alphas));
      const double fake = surrogate_fake_score(ssim(g, t));
      const double adv = adversarial_loss({}, std::span<const double>(&fake, 1), AdversarialSide::kGenerator);
      emit({{"adversarial", adv},
            {"pixel", pixel},
            {"perceptual", perceptual},
            {"pyramid", pyramid},
            {"total", total_loss(adv, pixel, perceptual, pyramid, cfg.weights)}});
    } else if (*evaluate_cmd) {
      std::vector<SynthFixture> fs_;
      for (int s = 1; s <= seeds; ++s) fs_.push_back(make_fixture(static_cast<std::uint64_t>(s), cfg));
      emit(evaluation_to_json(evaluate(fs_, cfg)));
    }
  } catch (const std::exception& e) {
    return fail(e.what(), 1);
  }
  return 0;
}
