#pragma once

#include <filesystem>
#include <vector>

namespace medmesh {

/// Reads an .eseg file: one integer class label per line, line i = edge i.
std::vector<int> load_eseg(const std::filesystem::path& path);

void save_eseg(const std::vector<int>& labels, const std::filesystem::path& path);

}  // namespace medmesh
