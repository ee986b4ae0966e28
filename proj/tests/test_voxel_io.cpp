#include <doctest.h>

#include <cstring>
#include <fstream>

#include "fairboard/compartments.hpp"
#include "fairboard/error.hpp"
#include "fairboard/volume.hpp"
#include "support.hpp"
#include "volume_gen.hpp"

using namespace fairboard;

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <class T>
void put_be(std::vector<std::uint8_t>& buf, std::size_t off, T value) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[off + i] = b[sizeof(T) - 1 - i];
}

// Big-endian 2x1x1 i16 file written field by field.
std::vector<std::uint8_t> big_endian_file() {
  std::vector<std::uint8_t> buf(352 + 4, 0);
  put_be<std::int32_t>(buf, 0, 348);
  put_be<std::int16_t>(buf, 40, 3);
  put_be<std::int16_t>(buf, 42, 2);
  put_be<std::int16_t>(buf, 44, 1);
  put_be<std::int16_t>(buf, 46, 1);
  put_be<std::int16_t>(buf, 70, 4);
  put_be<std::int16_t>(buf, 72, 16);
  for (int i = 0; i < 3; ++i) put_be<float>(buf, 80 + 4 * i, 1.5f);
  put_be<float>(buf, 108, 352.0f);
  std::memcpy(buf.data() + 344, "n+1\0", 4);
  put_be<std::int16_t>(buf, 352, 300);
  put_be<std::int16_t>(buf, 354, -2);
  return buf;
}

}  // namespace

TEST_CASE("volume roundtrip preserves every field, raw and gzip") {
  fbtest::TempDir dir("vol");
  Rng rng(7);
  for (int i = 0; i < 40; ++i) {
    const Volume v = fbtest::random_volume(rng);
    write_volume(v, dir / "a.nii");
    write_volume(v, dir / "a.nii.gz");
    CHECK(read_volume(dir / "a.nii") == v);
    CHECK(read_volume(dir / "a.nii.gz") == v);
  }
}

TEST_CASE("gzip-compressed copy of a raw file decodes identically") {
  fbtest::TempDir dir("vol");
  Rng rng(3);
  const Volume v = fbtest::random_volume(rng);
  write_volume(v, dir / "a.nii");
  const auto raw = slurp(dir / "a.nii");
  spit(dir / "b.nii", gzip_compress(raw));
  CHECK(is_gzip(slurp(dir / "b.nii")));
  CHECK(read_volume(dir / "b.nii") == read_volume(dir / "a.nii"));
}

TEST_CASE("2x2x2 u8 volume occupies header plus eight bytes") {
  fbtest::TempDir dir("vol");
  write_volume(Volume::zeros({2, 2, 2}, {1, 1, 1}, Dtype::U8), dir / "z.nii");
  CHECK(std::filesystem::file_size(dir / "z.nii") == kDataOffset + 8);
}

TEST_CASE("f32 spacing survives exactly") {
  fbtest::TempDir dir("vol");
  Volume v = Volume::zeros({3, 2, 2}, {2.0, 2.0, 2.0}, Dtype::F32);
  v.data[5] = 0.25;
  write_volume(v, dir / "f.nii");
  const Volume r = read_volume(dir / "f.nii");
  CHECK(r.spacing == std::array<double, 3>{2.0, 2.0, 2.0});
  CHECK(r == v);
}

TEST_CASE("malformed input is rejected") {
  fbtest::TempDir dir("vol");
  Volume v = Volume::zeros({4, 4, 4}, {1, 1, 1}, Dtype::U8);
  write_volume(v, dir / "ok.nii");
  auto bytes = slurp(dir / "ok.nii");

  SUBCASE("corrupted magic") {
    auto bad = bytes;
    bad[345] = 'X';
    spit(dir / "bad.nii", bad);
    CHECK_THROWS_AS(read_volume(dir / "bad.nii"), Error);
    try {
      read_volume(dir / "bad.nii");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadMagic);
    }
  }
  SUBCASE("unsupported datatype") {
    auto bad = bytes;
    bad[70] = 64;  // float64
    spit(dir / "bad.nii", bad);
    try {
      read_volume(dir / "bad.nii");
      FAIL("expected UnsupportedDtype");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsupportedDtype);
    }
  }
  SUBCASE("truncated data") {
    auto bad = bytes;
    bad.resize(bad.size() - 3);
    spit(dir / "bad.nii", bad);
    try {
      read_volume(dir / "bad.nii");
      FAIL("expected TruncatedFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TruncatedFile);
    }
  }
  SUBCASE("truncated gzip") {
    auto gz = gzip_compress(bytes);
    gz.resize(gz.size() / 2);
    spit(dir / "bad.nii.gz", gz);
    try {
      read_volume(dir / "bad.nii.gz");
      FAIL("expected TruncatedFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TruncatedFile);
    }
  }
}

TEST_CASE("big-endian header and data are honoured") {
  fbtest::TempDir dir("vol");
  spit(dir / "be.nii", big_endian_file());
  const Volume v = read_volume(dir / "be.nii");
  CHECK(v.dims == std::array<int, 3>{2, 1, 1});
  CHECK(v.dtype_tag == Dtype::I16);
  CHECK(v.spacing[0] == 1.5);
  CHECK(v.data == std::vector<double>{300.0, -2.0});
  CHECK(v.affine == diagonal_affine({1.5, 1.5, 1.5}));
}

TEST_CASE("invalid volumes are rejected before writing") {
  fbtest::TempDir dir("vol");
  Volume v = Volume::zeros({2, 2, 2}, {1, 1, 1}, Dtype::U8);
  v.data.pop_back();
  CHECK_THROWS_AS(write_volume(v, dir / "x.nii"), Error);
  CHECK_FALSE(std::filesystem::exists(dir / "x.nii"));

  Volume s = Volume::zeros({2, 2, 2}, {1, 0, 1}, Dtype::U8);
  CHECK_THROWS_AS(write_volume(s, dir / "x.nii"), Error);
  Volume a = Volume::zeros({2, 2, 2}, {1, 1, 1}, Dtype::U8);
  a.affine[3][0] = 1.0;
  CHECK_THROWS_AS(write_volume(a, dir / "x.nii"), Error);
  Volume u = Volume::zeros({2, 2, 2}, {1, 1, 1}, Dtype::U8);
  u.data[0] = 300;
  CHECK_THROWS_AS(write_volume(u, dir / "x.nii"), Error);
}

TEST_CASE("compartment extraction") {
  const LabelMap lm = LabelMap::defaults();
  SUBCASE("all zero") {
    const auto m = extract_compartments(Volume::zeros({3, 3, 3}, {1, 1, 1}, Dtype::U8), lm);
    for (const auto& c : m) CHECK(c.count() == 0);
  }
  SUBCASE("single ET voxel") {
    Volume l = Volume::zeros({3, 3, 3}, {1, 1, 1}, Dtype::U8);
    l.at(1, 2, 0) = 4;
    const auto m = extract_compartments(l, lm);
    const auto& et = m[static_cast<int>(Compartment::ET)].volume;
    const auto& wt = m[static_cast<int>(Compartment::WT)].volume;
    CHECK(m[static_cast<int>(Compartment::ET)].count() == 1);
    CHECK(m[static_cast<int>(Compartment::WT)].count() == 1);
    CHECK(et.at(1, 2, 0) == 1.0);
    CHECK(wt.at(1, 2, 0) == 1.0);
    CHECK(m[static_cast<int>(Compartment::NET)].count() == 0);
  }
  SUBCASE("disjoint NET and OED add up in WT") {
    Volume l = Volume::zeros({4, 4, 4}, {1, 1, 1}, Dtype::U8);
    for (int i = 0; i < 5; ++i) l.data[static_cast<std::size_t>(i)] = 1;
    for (int i = 10; i < 17; ++i) l.data[static_cast<std::size_t>(i)] = 2;
    const auto m = extract_compartments(l, lm);
    std::size_t oracle = 0;
    for (double x : l.data) oracle += x != 0.0;
    CHECK(m[static_cast<int>(Compartment::NET)].count() == 5);
    CHECK(m[static_cast<int>(Compartment::OED)].count() == 7);
    CHECK(m[static_cast<int>(Compartment::WT)].count() == oracle);
    CHECK(oracle == 12);
  }
  SUBCASE("unmapped label") {
    Volume l = Volume::zeros({2, 2, 2}, {1, 1, 1}, Dtype::U8);
    l.data[3] = 3;
    try {
      extract_compartments(l, lm);
      FAIL("expected UnknownLabel");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownLabel);
    }
  }
}

TEST_CASE("compartment masks partition the labels") {
  Rng rng(11);
  const LabelMap lm = LabelMap::defaults();
  for (int t = 0; t < 20; ++t) {
    Volume l = Volume::zeros({6, 5, 4}, {1, 1, 1}, Dtype::U8);
    std::array<std::size_t, 5> counts{};
    for (auto& x : l.data) {
      const int codes[] = {0, 1, 2, 4};
      x = codes[rng.index(4)];
      ++counts[static_cast<std::size_t>(x)];
    }
    const auto m = extract_compartments(l, lm);
    CHECK(m[static_cast<int>(Compartment::NET)].count() == counts[1]);
    CHECK(m[static_cast<int>(Compartment::OED)].count() == counts[2]);
    CHECK(m[static_cast<int>(Compartment::ET)].count() == counts[4]);
    for (std::size_t i = 0; i < l.size(); ++i) {
      const double mx = std::max({m[1].volume.data[i], m[2].volume.data[i], m[3].volume.data[i]});
      CHECK(m[0].volume.data[i] == mx);
    }
  }
}

TEST_CASE("label map parsing and override") {
  const auto lm = LabelMap::parse("# custom\n3=ET\nNET=1\n2=OED\n");
  CHECK(lm.labels.at(3) == Compartment::ET);
  CHECK(lm.labels.at(1) == Compartment::NET);
  Volume l = Volume::zeros({2, 1, 1}, {1, 1, 1}, Dtype::U8);
  l.data = {3, 1};
  const auto m = extract_compartments(l, lm);
  CHECK(m[static_cast<int>(Compartment::ET)].count() == 1);
  CHECK_THROWS_AS(LabelMap::parse("1=WT\n"), Error);
  CHECK_THROWS_AS(LabelMap::parse("nonsense\n"), Error);
}

TEST_CASE("nearest-neighbour resampling") {
  SUBCASE("own dims is the identity") {
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
      const auto m = fbtest::random_blob(rng, {7, 5, 6}, 3);
      const auto r = resample_mask(m, m.volume.dims);
      CHECK(r.volume.data == m.volume.data);
      CHECK(r.volume.dims == m.volume.dims);
    }
  }
  SUBCASE("full foreground stays full") {
    auto m = fbtest::box_mask({128, 128, 128}, {0, 0, 0}, {128, 128, 128});
    const auto r = resample_mask(m, {64, 64, 64});
    CHECK(r.count() == 64u * 64u * 64u);
  }
  SUBCASE("single centre voxel of 4^3 onto 2^3") {
    // Output i pulls source (i + 0.5) * 2 - 0.5 = 2i + 0.5, ties down: 0 or 2 per axis.
    auto m = fbtest::mask_from({4, 4, 4}, {{2, 2, 2}});
    const auto r = resample_mask(m, {2, 2, 2});
    CHECK(r.count() == 1);
    CHECK(r.volume.at(1, 1, 1) == 1.0);
  }
  SUBCASE("binarity and idempotence at fixed dims") {
    Rng rng(9);
    const auto m = fbtest::random_blob(rng, {12, 12, 12}, 4);
    const auto r = resample_mask(m, {5, 7, 9});
    for (double x : r.volume.data) CHECK((x == 0.0 || x == 1.0));
    CHECK(resample_mask(r, {5, 7, 9}).volume.data == r.volume.data);
  }
}
