#include "wbt/motion/clip_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "wbt/core/errors.hpp"

namespace wbt::motion {
namespace {

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double ParseNumber(std::string_view token, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line, "malformed number '" + std::string(token) + "'");
  }
  return v;
}

std::string_view HeaderValue(std::string_view token, std::string_view key, int line) {
  if (token.substr(0, key.size()) != key) {
    throw ParseError(line, "malformed header: expected '" + std::string(key) + "'");
  }
  return token.substr(key.size());
}

void AppendNumber(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

MotionClip ParseClip(std::string_view text, std::string_view default_name) {
  MotionClip clip;
  clip.name = std::string(default_name);
  int line_no = 0;
  int num_dofs = -1;
  bool lin_missing = false;
  bool ang_missing = false;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto tokens = SplitWhitespace(line);

    if (num_dofs < 0) {
      if (tokens.empty()) continue;
      if (tokens.size() != 5 || tokens[0] != "MCLIP" || tokens[1] != "v1") {
        throw ParseError(line_no, "malformed header, expected 'MCLIP v1 fps=<f> J=<j> K=12'");
      }
      clip.fps = ParseNumber(HeaderValue(tokens[2], "fps=", line_no), line_no);
      const double j = ParseNumber(HeaderValue(tokens[3], "J=", line_no), line_no);
      const double k = ParseNumber(HeaderValue(tokens[4], "K=", line_no), line_no);
      if (!(clip.fps > 0)) throw ParseError(line_no, "fps must be positive");
      if (j < 1 || j != std::floor(j)) throw ParseError(line_no, "J must be a positive integer");
      if (k != kNumKeypoints) throw ParseError(line_no, "K must be 12");
      num_dofs = static_cast<int>(j);
      continue;
    }
    if (tokens.empty()) continue;
    if (tokens[0].front() == '#') {
      const std::string_view rest = line.substr(line.find('#') + 1);
      const auto words = SplitWhitespace(rest);
      if (!words.empty() && words[0] == "name:" && words.size() >= 2) {
        clip.name = std::string(words[1]);
      } else if (!words.empty() && words[0] == "tags:") {
        clip.tags.clear();
        for (size_t i = 1; i < words.size(); ++i) clip.tags.emplace_back(words[i]);
      }
      continue;
    }

    const size_t expected = 3 + 4 + 3 + 3 + num_dofs + 3 * kNumKeypoints + 1;
    if (tokens.size() != expected) {
      throw ParseError(line_no, "dimension mismatch: expected " + std::to_string(expected) +
                                    " fields, got " + std::to_string(tokens.size()));
    }
    MotionFrame f;
    size_t t = 0;
    auto next = [&]() { return ParseNumber(tokens[t++], line_no); };
    auto next_velocity = [&](bool* missing) {
      Vec3 v = Vec3::Zero();
      for (int i = 0; i < 3; ++i) {
        if (tokens[t] == "-") {
          *missing = true;
          ++t;
        } else {
          v[i] = next();
        }
      }
      return v;
    };
    for (int i = 0; i < 3; ++i) f.root_pos[i] = next();
    const double w = next(), x = next(), y = next(), z = next();
    f.root_quat = Quat(w, x, y, z);
    if (std::abs(f.root_quat.norm() - 1.0) > 1e-6) {
      throw ParseError(line_no, "root quaternion is not unit length");
    }
    f.root_quat.normalize();
    f.root_lin_vel = next_velocity(&lin_missing);
    f.root_ang_vel = next_velocity(&ang_missing);
    f.dof_pos.resize(num_dofs);
    for (int i = 0; i < num_dofs; ++i) f.dof_pos[i] = next();
    for (int k = 0; k < kNumKeypoints; ++k) {
      for (int i = 0; i < 3; ++i) f.keypoints_local(k, i) = next();
    }
    f.height = next();
    clip.frames.push_back(std::move(f));
  }
  if (num_dofs < 0) throw ParseError(1, "missing header");
  if (clip.num_frames() < 2) throw ParseError(line_no, "clip needs at least 2 frames");
  if (lin_missing) ReconstructLinearVelocities(clip);
  if (ang_missing) ReconstructAngularVelocities(clip);
  ValidateClip(clip);
  return clip;
}

std::string FormatClip(const MotionClip& clip) {
  std::string out;
  out += "MCLIP v1 fps=";
  AppendNumber(out, clip.fps);
  out += " J=" + std::to_string(clip.num_dofs()) + " K=12\n";
  if (!clip.name.empty()) out += "# name: " + clip.name + "\n";
  if (!clip.tags.empty()) {
    out += "# tags:";
    for (const auto& t : clip.tags) out += " " + t;
    out += "\n";
  }
  for (const MotionFrame& f : clip.frames) {
    std::vector<double> v;
    v.reserve(50 + f.num_dofs());
    for (int i = 0; i < 3; ++i) v.push_back(f.root_pos[i]);
    v.push_back(f.root_quat.w());
    v.push_back(f.root_quat.x());
    v.push_back(f.root_quat.y());
    v.push_back(f.root_quat.z());
    for (int i = 0; i < 3; ++i) v.push_back(f.root_lin_vel[i]);
    for (int i = 0; i < 3; ++i) v.push_back(f.root_ang_vel[i]);
    for (int i = 0; i < f.num_dofs(); ++i) v.push_back(f.dof_pos[i]);
    for (int k = 0; k < kNumKeypoints; ++k) {
      for (int i = 0; i < 3; ++i) v.push_back(f.keypoints_local(k, i));
    }
    v.push_back(f.height);
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) out += ' ';
      AppendNumber(out, v[i]);
    }
    out += '\n';
  }
  return out;
}

MotionClip LoadClip(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open clip file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseClip(ss.str(), path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  }
}

void SaveClip(const MotionClip& clip, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write clip file " + path.string());
  out << FormatClip(clip);
}

}  // namespace wbt::motion
