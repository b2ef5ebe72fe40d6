#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace aifml::testing {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(AIFML_DATA_DIR) / name;
}

}  // namespace aifml::testing
