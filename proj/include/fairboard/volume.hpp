#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fairboard {

enum class Dtype : std::uint8_t { U8, I16, F32 };

const char* to_string(Dtype d);

using Affine = std::array<std::array<double, 4>, 4>;

Affine diagonal_affine(const std::array<double, 3>& spacing);

// A 3-D scalar grid. Data are stored x-fastest; dtype_tag records the on-disk
// element type. Values of integer-typed volumes must be integral and in range.
struct Volume {
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  Affine affine = diagonal_affine({1.0, 1.0, 1.0});
  std::vector<double> data;
  Dtype dtype_tag = Dtype::F32;

  static Volume zeros(std::array<int, 3> dims, std::array<double, 3> spacing = {1.0, 1.0, 1.0},
                      Dtype dtype = Dtype::F32);
  // A zero volume sharing this volume's geometry.
  Volume like(Dtype dtype) const;

  std::size_t size() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(dims[0]) * (y + static_cast<std::size_t>(dims[1]) * z);
  }
  std::array<int, 3> coords(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(dims[0]), ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
  }
  double& at(int x, int y, int z) { return data[index(x, y, z)]; }
  double at(int x, int y, int z) const { return data[index(x, y, z)]; }

  bool same_grid(const Volume& other) const { return dims == other.dims && spacing == other.spacing; }

  // Throws InvalidVolume when an invariant is violated.
  void validate() const;

  friend bool operator==(const Volume&, const Volume&) = default;
};

inline constexpr std::size_t kHeaderSize = 348;
inline constexpr std::size_t kDataOffset = 352;

// Single-file volume format, classic 348-byte header with magic "n+1".
// Supported element types: u8 (code 2), i16 (code 4), f32 (code 16).
// Input may be gzip-compressed (detected from the 0x1F8B prefix).
Volume read_volume(const std::filesystem::path& path);
Volume decode_volume(const std::vector<std::uint8_t>& bytes);

// Spacing and affine are stored as float32 in the header, so geometry
// round-trips exactly only when it is float32-representable.
// Paths ending in ".gz" are written gzip-compressed.
void write_volume(const Volume& v, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_volume(const Volume& v);

std::vector<std::uint8_t> gzip_compress(const std::vector<std::uint8_t>& raw);
std::vector<std::uint8_t> gzip_decompress(const std::vector<std::uint8_t>& gz);
bool is_gzip(const std::vector<std::uint8_t>& bytes);

}  // namespace fairboard
