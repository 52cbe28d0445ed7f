#pragma once

#include <filesystem>
#include <fstream>

#include "softwarp/error.hpp"
#include "softwarp/fixture.hpp"
#include "softwarp/png_io.hpp"
#include "softwarp/serialize.hpp"

// A fixture directory holds condition.png, condition_parsing.png, target_parsing.png,
// target.png and fixture.json (seed, poses, ground-truth transforms).

namespace softwarp {

namespace detail {

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_guard(path.string().c_str(), [&] { return Json::parse(in); });
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline void save_fixture(const std::filesystem::path& dir, const SynthFixture& f) {
  std::filesystem::create_directories(dir);
  write_png(dir / "condition.png", f.condition_image);
  write_segmentation_png(dir / "condition_parsing.png", f.condition_parsing);
  write_segmentation_png(dir / "target_parsing.png", f.target_parsing);
  write_png(dir / "target.png", f.target_image);
  detail::write_json_file(dir / "fixture.json", {{"seed", f.seed},
                                                 {"condition_pose", pose_to_json(f.condition_pose)},
                                                 {"target_pose", pose_to_json(f.target_pose)},
                                                 {"ground_truth", transforms_to_json(f.ground_truth)}});
}

inline SynthFixture load_fixture(const std::filesystem::path& dir) {
  SynthFixture f;
  const Json meta = detail::read_json_file(dir / "fixture.json");
  detail::parse_guard("fixture.json", [&] {
    f.seed = meta.value("seed", std::uint64_t{0});
    f.condition_pose = pose_from_json(meta.at("condition_pose"));
    f.target_pose = pose_from_json(meta.at("target_pose"));
    if (meta.contains("ground_truth")) f.ground_truth = transforms_from_json(meta.at("ground_truth"));
    return 0;
  });
  f.condition_image = read_png(dir / "condition.png");
  f.condition_parsing = read_segmentation_png(dir / "condition_parsing.png");
  if (std::filesystem::exists(dir / "target_parsing.png")) f.target_parsing = read_segmentation_png(dir / "target_parsing.png");
  if (std::filesystem::exists(dir / "target.png")) f.target_image = read_png(dir / "target.png");
  return f;
}

}  // namespace softwarp
