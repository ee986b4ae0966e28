#pragma once

#include "fairboard/rng.hpp"
#include "fairboard/volume.hpp"

namespace fbtest {

// Random valid volume whose geometry and values are exactly representable on
// disk (float32 header fields, dtype-range data).
inline fairboard::Volume random_volume(fairboard::Rng& rng) {
  using fairboard::Dtype;
  fairboard::Volume v;
  for (auto& d : v.dims) d = 1 + static_cast<int>(rng.index(12));
  for (auto& s : v.spacing) s = static_cast<float>(0.25 + 3.0 * rng.uniform());
  v.affine = fairboard::diagonal_affine(v.spacing);
  if (rng.coin())
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) v.affine[r][c] = static_cast<float>(rng.normal(0.0, 50.0));
  const auto pick = rng.index(3);
  v.dtype_tag = pick == 0 ? Dtype::U8 : pick == 1 ? Dtype::I16 : Dtype::F32;
  v.data.resize(v.size());
  for (auto& x : v.data) {
    switch (v.dtype_tag) {
      case Dtype::U8: x = static_cast<double>(rng.index(256)); break;
      case Dtype::I16: x = static_cast<double>(rng.index(65536)) - 32768.0; break;
      case Dtype::F32: x = static_cast<float>(rng.normal(0.0, 1000.0)); break;
    }
  }
  return v;
}

}  // namespace fbtest
