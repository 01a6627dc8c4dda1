#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ain/embedding.hpp"

namespace testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("ain-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline ain::EmbeddingTable table_of(std::initializer_list<std::pair<char32_t, std::vector<double>>> rows) {
  std::vector<char32_t> chars;
  ain::Matrix m(static_cast<long>(rows.size()), static_cast<long>(rows.begin()->second.size()));
  long r = 0;
  for (const auto& [ch, v] : rows) {
    chars.push_back(ch);
    for (std::size_t c = 0; c < v.size(); ++c) m(r, static_cast<long>(c)) = v[c];
    ++r;
  }
  return ain::EmbeddingTable(std::move(chars), std::move(m));
}

// Two tight pairs: {甲, 乙} and {丙, 丁}.
inline constexpr char32_t kA = U'甲', kB = U'乙', kC = U'丙', kD = U'丁';
inline ain::EmbeddingTable two_pairs() {
  return table_of({{kA, {1.0, 0.1, 0.0}}, {kB, {1.0, -0.1, 0.0}}, {kC, {0.0, 0.1, 1.0}}, {kD, {0.0, -0.1, 1.0}}});
}

}  // namespace testing
