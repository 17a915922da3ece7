#include "tvsn/eval/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "tvsn/core/error.hpp"

namespace tvsn::eval {

namespace {

void check_same(const Image& a, const Image& b) {
  if (!a.same_size(b)) {
    fail(ErrorKind::Shape, "image sizes differ: " + std::to_string(a.channels()) + "x" + std::to_string(a.height()) +
                               "x" + std::to_string(a.width()) + " vs " + std::to_string(b.channels()) + "x" +
                               std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
  if (a.size() == 0) fail(ErrorKind::Shape, "empty image");
}

}  // namespace

double l1_error(const Image& a, const Image& b) {
  check_same(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  return acc / static_cast<double>(a.size());
}

double ssim(const Image& a, const Image& b, const SsimOptions& o) {
  check_same(a, b);
  const int k = o.window;
  if (k < 1 || k % 2 == 0) fail(ErrorKind::Parameter, "SSIM window must be odd and positive");
  if (a.height() < k || a.width() < k) {
    fail(ErrorKind::Shape, "image smaller than the " + std::to_string(k) + "x" + std::to_string(k) + " SSIM window");
  }
  std::vector<double> w1(static_cast<std::size_t>(k));
  double norm = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = i - (k - 1) / 2.0;
    w1[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
    norm += w1[static_cast<std::size_t>(i)];
  }
  for (auto& v : w1) v /= norm;
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);

  const int oh = a.height() - k + 1;
  const int ow = a.width() - k + 1;
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    double channel = 0.0;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            const double w = w1[static_cast<std::size_t>(i)] * w1[static_cast<std::size_t>(j)];
            const double va = a(c, y + i, x + j);
            const double vb = b(c, y + i, x + j);
            mx += w * va;
            my += w * vb;
            sxx += w * va * va;
            syy += w * vb * vb;
            sxy += w * va * vb;
          }
        }
        const double vx = sxx - mx * mx;
        const double vy = syy - my * my;
        const double cxy = sxy - mx * my;
        channel += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    }
    total += channel / (static_cast<double>(oh) * ow);
  }
  return total / a.channels();
}

double mean_gradient(const Image& image) {
  if (image.height() < 2 || image.width() < 2) fail(ErrorKind::Shape, "image too small for gradients");
  double acc = 0.0;
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y + 1 < image.height(); ++y) {
      for (int x = 0; x + 1 < image.width(); ++x) {
        const double dx = image(c, y, x + 1) - image(c, y, x);
        const double dy = image(c, y + 1, x) - image(c, y, x);
        acc += std::sqrt(dx * dx + dy * dy);
      }
    }
  }
  return acc / (static_cast<double>(image.channels()) * (image.height() - 1) * (image.width() - 1));
}

}  // namespace tvsn::eval
