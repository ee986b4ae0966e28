#include "fairboard/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <zlib.h>

#include "fairboard/error.hpp"

namespace fairboard {

const char* to_string(Dtype d) {
  switch (d) {
    case Dtype::U8: return "u8";
    case Dtype::I16: return "i16";
    case Dtype::F32: return "f32";
  }
  return "?";
}

Affine diagonal_affine(const std::array<double, 3>& spacing) {
  Affine a{};
  for (int i = 0; i < 3; ++i) a[i][i] = spacing[i];
  a[3][3] = 1.0;
  return a;
}

Volume Volume::zeros(std::array<int, 3> dims, std::array<double, 3> spacing, Dtype dtype) {
  Volume v;
  v.dims = dims;
  v.spacing = spacing;
  v.affine = diagonal_affine(spacing);
  v.dtype_tag = dtype;
  v.data.assign(v.size(), 0.0);
  return v;
}

Volume Volume::like(Dtype dtype) const {
  Volume v;
  v.dims = dims;
  v.spacing = spacing;
  v.affine = affine;
  v.dtype_tag = dtype;
  v.data.assign(size(), 0.0);
  return v;
}

void Volume::validate() const {
  for (int d : dims)
    if (d <= 0 || d > std::numeric_limits<std::int16_t>::max())
      throw Error(ErrorCode::InvalidVolume, "dimension out of range");
  if (data.size() != size()) throw Error(ErrorCode::InvalidVolume, "data length does not match dims");
  for (double s : spacing)
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::InvalidVolume, "spacing must be positive");
  if (affine[3][0] != 0.0 || affine[3][1] != 0.0 || affine[3][2] != 0.0 || affine[3][3] != 1.0)
    throw Error(ErrorCode::InvalidVolume, "affine last row must be (0,0,0,1)");
  if (dtype_tag == Dtype::F32) return;
  const double lo = dtype_tag == Dtype::U8 ? 0.0 : -32768.0;
  const double hi = dtype_tag == Dtype::U8 ? 255.0 : 32767.0;
  for (double x : data)
    if (!(x >= lo && x <= hi) || x != std::floor(x))
      throw Error(ErrorCode::InvalidVolume, std::string("value not representable as ") + to_string(dtype_tag));
}

namespace {

constexpr std::int16_t kCodeU8 = 2, kCodeI16 = 4, kCodeF32 = 16;

template <class T>
T byteswap_value(T v) {
  std::array<std::uint8_t, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

// Reads a header field, honouring the file's byte order.
struct Reader {
  const std::uint8_t* base;
  bool swap;
  template <class T>
  T get(std::size_t off) const {
    T v;
    std::memcpy(&v, base + off, sizeof(T));
    return swap ? byteswap_value(v) : v;
  }
};

constexpr bool kHostLittle = std::endian::native == std::endian::little;

template <class T>
void put_le(std::vector<std::uint8_t>& buf, std::size_t off, T v) {
  if constexpr (!kHostLittle) v = byteswap_value(v);
  std::memcpy(buf.data() + off, &v, sizeof(T));
}

std::size_t element_size(Dtype d) { return d == Dtype::U8 ? 1 : d == Dtype::I16 ? 2 : 4; }

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

bool is_gzip(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

std::vector<std::uint8_t> gzip_decompress(const std::vector<std::uint8_t>& gz) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw Error(ErrorCode::IoFailure, "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(gz.data());
  zs.avail_in = static_cast<uInt>(gz.size());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      if (rc == Z_BUF_ERROR) throw Error(ErrorCode::TruncatedFile, "gzip stream ends early");
      throw Error(ErrorCode::IoFailure, "corrupt gzip stream");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (rc != Z_STREAM_END && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::TruncatedFile, "gzip stream ends early");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> gzip_compress(const std::vector<std::uint8_t>& raw) {
  z_stream zs{};
  // windowBits 31 selects the gzip wrapper; zlib writes mtime 0, so output is deterministic.
  if (deflateInit2(&zs, 6, Z_DEFLATED, 31, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(ErrorCode::IoFailure, "deflateInit2 failed");
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(raw.size())) + 32);
  zs.next_in = const_cast<Bytef*>(raw.data());
  zs.avail_in = static_cast<uInt>(raw.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::IoFailure, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

Volume decode_volume(const std::vector<std::uint8_t>& file_bytes) {
  const std::vector<std::uint8_t> inflated = is_gzip(file_bytes) ? gzip_decompress(file_bytes) : std::vector<std::uint8_t>{};
  const std::vector<std::uint8_t>& bytes = is_gzip(file_bytes) ? inflated : file_bytes;

  if (bytes.size() < 4) throw Error(ErrorCode::BadMagic, "file too short for a volume header");
  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  bool swap = false;
  if (sizeof_hdr != static_cast<std::int32_t>(kHeaderSize)) {
    if (byteswap_value(sizeof_hdr) != static_cast<std::int32_t>(kHeaderSize))
      throw Error(ErrorCode::BadMagic, "header size field is not 348");
    swap = true;
  }
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::TruncatedFile, "header shorter than 348 bytes");
  if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0) throw Error(ErrorCode::BadMagic, "magic is not \"n+1\"");

  const Reader h{bytes.data(), swap};
  const auto ndim = h.get<std::int16_t>(40);
  if (ndim < 1 || ndim > 7) throw Error(ErrorCode::InvalidVolume, "dim[0] out of range");
  Volume v;
  for (int i = 0; i < 3; ++i) v.dims[i] = i < ndim ? h.get<std::int16_t>(42 + 2 * i) : 1;
  for (int i = 3; i < ndim; ++i)
    if (h.get<std::int16_t>(42 + 2 * i) > 1) throw Error(ErrorCode::InvalidVolume, "more than three dimensions");
  for (int d : v.dims)
    if (d <= 0) throw Error(ErrorCode::InvalidVolume, "non-positive dimension");

  switch (h.get<std::int16_t>(70)) {
    case kCodeU8: v.dtype_tag = Dtype::U8; break;
    case kCodeI16: v.dtype_tag = Dtype::I16; break;
    case kCodeF32: v.dtype_tag = Dtype::F32; break;
    default:
      throw Error(ErrorCode::UnsupportedDtype, "datatype code " + std::to_string(h.get<std::int16_t>(70)));
  }
  for (int i = 0; i < 3; ++i) v.spacing[i] = std::fabs(static_cast<double>(h.get<float>(80 + 4 * i)));

  const auto sform_code = h.get<std::int16_t>(254);
  if (sform_code > 0) {
    v.affine = Affine{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) v.affine[r][c] = static_cast<double>(h.get<float>(280 + 16 * r + 4 * c));
    v.affine[3] = {0.0, 0.0, 0.0, 1.0};
  } else {
    v.affine = diagonal_affine(v.spacing);
  }

  const double vox_offset = h.get<float>(108);
  if (!(vox_offset >= static_cast<double>(kHeaderSize))) throw Error(ErrorCode::InvalidVolume, "bad vox_offset");
  const auto offset = static_cast<std::size_t>(vox_offset);
  const std::size_t esize = element_size(v.dtype_tag);
  const std::size_t need = v.size() * esize;
  if (bytes.size() < offset || bytes.size() - offset < need)
    throw Error(ErrorCode::TruncatedFile, "data section shorter than header promises");

  const Reader d{bytes.data() + offset, swap};
  v.data.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    switch (v.dtype_tag) {
      case Dtype::U8: v.data[i] = d.get<std::uint8_t>(i); break;
      case Dtype::I16: v.data[i] = d.get<std::int16_t>(2 * i); break;
      case Dtype::F32: v.data[i] = d.get<float>(4 * i); break;
    }
  }

  const double slope = h.get<float>(112), inter = h.get<float>(116);
  if (slope != 0.0 && std::isfinite(slope) && std::isfinite(inter) && !(slope == 1.0 && inter == 0.0)) {
    for (double& x : v.data) x = x * slope + inter;
    v.dtype_tag = Dtype::F32;
  }
  v.validate();
  return v;
}

Volume read_volume(const std::filesystem::path& path) {
  return decode_volume(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_volume(const Volume& v) {
  v.validate();
  const std::size_t esize = element_size(v.dtype_tag);
  std::vector<std::uint8_t> buf(kDataOffset + v.size() * esize, 0);
  put_le<std::int32_t>(buf, 0, static_cast<std::int32_t>(kHeaderSize));
  buf[38] = 'r';
  put_le<std::int16_t>(buf, 40, 3);
  for (int i = 0; i < 3; ++i) put_le<std::int16_t>(buf, 42 + 2 * i, static_cast<std::int16_t>(v.dims[i]));
  for (int i = 3; i < 7; ++i) put_le<std::int16_t>(buf, 42 + 2 * i, 1);
  const std::int16_t code = v.dtype_tag == Dtype::U8 ? kCodeU8 : v.dtype_tag == Dtype::I16 ? kCodeI16 : kCodeF32;
  put_le<std::int16_t>(buf, 70, code);
  put_le<std::int16_t>(buf, 72, static_cast<std::int16_t>(8 * esize));
  put_le<float>(buf, 76, 1.0f);
  for (int i = 0; i < 3; ++i) put_le<float>(buf, 80 + 4 * i, static_cast<float>(v.spacing[i]));
  put_le<float>(buf, 108, static_cast<float>(kDataOffset));
  put_le<float>(buf, 112, 1.0f);
  put_le<float>(buf, 116, 0.0f);
  buf[123] = 2;  // mm
  put_le<std::int16_t>(buf, 252, 0);
  put_le<std::int16_t>(buf, 254, 1);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) put_le<float>(buf, 280 + 16 * r + 4 * c, static_cast<float>(v.affine[r][c]));
  std::memcpy(buf.data() + 344, "n+1\0", 4);

  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t off = kDataOffset + i * esize;
    switch (v.dtype_tag) {
      case Dtype::U8: buf[off] = static_cast<std::uint8_t>(v.data[i]); break;
      case Dtype::I16: put_le<std::int16_t>(buf, off, static_cast<std::int16_t>(v.data[i])); break;
      case Dtype::F32: put_le<float>(buf, off, static_cast<float>(v.data[i])); break;
    }
  }
  return buf;
}

void write_volume(const Volume& v, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = encode_volume(v);
  if (path.extension() == ".gz") bytes = gzip_compress(bytes);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

}  // namespace fairboard
