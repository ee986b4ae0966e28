#pragma once

#include "fairboard/volume.hpp"

namespace fairboard::stats {

// sigma = fwhm / (2 sqrt(2 ln 2))
double sigma_from_fwhm(double fwhm);

// Separable Gaussian smoothing. The kernel is truncated at 4 sigma and
// renormalized over the in-bounds taps, so constant fields stay constant up
// to the borders. fwhm_mm == 0 returns the input unchanged. Output is f32.
Volume gaussian_smooth(const Volume& v, double fwhm_mm);

}  // namespace fairboard::stats
