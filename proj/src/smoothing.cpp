#include "fairboard/smoothing.hpp"

#include <cmath>
#include <vector>

#include "fairboard/error.hpp"

namespace fairboard::stats {

double sigma_from_fwhm(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

namespace {

void smooth_axis(std::vector<double>& data, const std::array<int, 3>& dims, int axis, double sigma_vox) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma_vox));
  if (radius < 1) return;
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int j = -radius; j <= radius; ++j)
    kernel[static_cast<std::size_t>(j + radius)] = std::exp(-0.5 * j * j / (sigma_vox * sigma_vox));

  const std::size_t stride[3] = {1, static_cast<std::size_t>(dims[0]),
                                 static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1])};
  const int len = dims[axis];
  const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
  std::vector<double> line(static_cast<std::size_t>(len)), out(static_cast<std::size_t>(len));
  for (int i2 = 0; i2 < dims[a2]; ++i2) {
    for (int i1 = 0; i1 < dims[a1]; ++i1) {
      const std::size_t base = static_cast<std::size_t>(i1) * stride[a1] + static_cast<std::size_t>(i2) * stride[a2];
      bool any = false;
      for (int q = 0; q < len; ++q) {
        line[static_cast<std::size_t>(q)] = data[base + static_cast<std::size_t>(q) * stride[axis]];
        any = any || line[static_cast<std::size_t>(q)] != 0.0;
      }
      if (!any) continue;
      for (int q = 0; q < len; ++q) {
        const int lo = std::max(-radius, -q), hi = std::min(radius, len - 1 - q);
        double acc = 0.0, wsum = 0.0;
        for (int j = lo; j <= hi; ++j) {
          const double w = kernel[static_cast<std::size_t>(j + radius)];
          acc += w * line[static_cast<std::size_t>(q + j)];
          wsum += w;
        }
        out[static_cast<std::size_t>(q)] = acc / wsum;
      }
      for (int q = 0; q < len; ++q) data[base + static_cast<std::size_t>(q) * stride[axis]] = out[static_cast<std::size_t>(q)];
    }
  }
}

}  // namespace

Volume gaussian_smooth(const Volume& v, double fwhm_mm) {
  if (!(fwhm_mm >= 0.0)) throw Error(ErrorCode::InvalidArgument, "FWHM must be non-negative");
  if (fwhm_mm == 0.0) return v;
  Volume out = v;
  out.dtype_tag = Dtype::F32;
  const double sigma_mm = sigma_from_fwhm(fwhm_mm);
  for (int axis = 0; axis < 3; ++axis) smooth_axis(out.data, out.dims, axis, sigma_mm / v.spacing[axis]);
  return out;
}

}  // namespace fairboard::stats
