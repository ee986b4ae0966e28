#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <unistd.h>

#include <algorithm>
#include <vector>

#include "fairboard/compartments.hpp"
#include "fairboard/rng.hpp"
#include "fairboard/volume.hpp"

namespace fbtest {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fairboard_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline fairboard::CompartmentMask mask_from(const std::array<int, 3>& dims, const std::vector<std::array<int, 3>>& voxels,
                                            std::array<double, 3> spacing = {1.0, 1.0, 1.0}) {
  fairboard::CompartmentMask m;
  m.volume = fairboard::Volume::zeros(dims, spacing, fairboard::Dtype::U8);
  for (const auto& v : voxels) m.volume.at(v[0], v[1], v[2]) = 1.0;
  return m;
}

inline fairboard::CompartmentMask box_mask(const std::array<int, 3>& dims, const std::array<int, 3>& lo,
                                           const std::array<int, 3>& hi) {
  std::vector<std::array<int, 3>> v;
  for (int z = lo[2]; z < hi[2]; ++z)
    for (int y = lo[1]; y < hi[1]; ++y)
      for (int x = lo[0]; x < hi[0]; ++x) v.push_back({x, y, z});
  return mask_from(dims, v);
}

// Random blob: union of a few random boxes.
inline fairboard::CompartmentMask random_blob(fairboard::Rng& rng, const std::array<int, 3>& dims, int boxes) {
  std::vector<std::array<int, 3>> v;
  for (int b = 0; b < boxes; ++b) {
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<int>(rng.index(static_cast<std::size_t>(dims[a])));
      hi[a] = std::min(dims[a], lo[a] + 1 + static_cast<int>(rng.index(5)));
    }
    for (int z = lo[2]; z < hi[2]; ++z)
      for (int y = lo[1]; y < hi[1]; ++y)
        for (int x = lo[0]; x < hi[0]; ++x) v.push_back({x, y, z});
  }
  return mask_from(dims, v);
}

}  // namespace fbtest
