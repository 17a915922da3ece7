#pragma once

#include "tvsn/core/grid.hpp"

namespace tvsn::eval {

// Mean absolute difference over all channels and pixels, values in [0,1].
double l1_error(const Image& a, const Image& b);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Gaussian-window SSIM averaged over valid window positions, then channels.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

// Mean gradient magnitude (forward differences), a blurriness statistic.
double mean_gradient(const Image& image);

}  // namespace tvsn::eval
