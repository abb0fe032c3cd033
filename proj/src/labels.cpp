#include "medmesh/labels.hpp"

#include <fstream>
#include <string>

#include "medmesh/error.hpp"

namespace medmesh {

std::vector<int> load_eseg(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      labels.push_back(std::stoi(line, &used));
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw Error(ErrorKind::IoError,
                  path.string() + ":" + std::to_string(line_no) + ": not an integer label");
    }
  }
  return labels;
}

void save_eseg(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  for (int l : labels) out << l << '\n';
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace medmesh
