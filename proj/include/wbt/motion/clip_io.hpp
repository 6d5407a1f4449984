#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "wbt/motion/motion_clip.hpp"

namespace wbt::motion {

// MCLIP v1 text format:
//
//   MCLIP v1 fps=<f> J=<j> K=12
//   # name: <name>            (optional)
//   # tags: <tag> <tag> ...   (optional)
//   <root_pos 3> <root_quat w x y z> <root_lin_vel 3> <root_ang_vel 3> <dof_pos J> <keypoints 36> <height>
//   ...
//
// Any velocity token may be '-', in which case that velocity vector is
// rebuilt by finite differences after loading.

MotionClip ParseClip(std::string_view text, std::string_view default_name = "clip");
std::string FormatClip(const MotionClip& clip);

MotionClip LoadClip(const std::filesystem::path& path);
void SaveClip(const MotionClip& clip, const std::filesystem::path& path);

}  // namespace wbt::motion
