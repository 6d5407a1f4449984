#pragma once

#include <filesystem>
#include <string>

namespace wbt::app {

inline constexpr const char* kManifestName = "manifest.sha256";

/// Lowercase hex SHA-256 of a file's bytes. Throws DataError if unreadable.
std::string Sha256File(const std::filesystem::path& path);

/// Rewrites <dir>/manifest.sha256 with "<hash>  <relative path>" for every
/// regular file under `dir` except the manifest, sorted by path.
void WriteManifest(const std::filesystem::path& dir);

}  // namespace wbt::app
