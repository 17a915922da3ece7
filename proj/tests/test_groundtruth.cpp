#include "doctest.h"

#include <algorithm>

#include "geometry_check.hpp"
#include "support.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/groundtruth/groundtruth.hpp"
#include "tvsn/render/procedural.hpp"

using namespace tvsn;

namespace {

std::shared_ptr<const render::Mesh> car(std::uint64_t seed = 0) {
  return std::make_shared<const render::Mesh>(render::make_procedural_object(seed, render::ObjectKind::CarLike));
}

gt::Mask rect_mask(int size, int y0, int y1, int x0, int x1) {
  gt::Mask m{Grid<float>(size, size, 0.0f)};
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.m(y, x) = 1.0f;
  return m;
}

}  // namespace

TEST_CASE("visibility and flow agree with brute-force ray casting") {
  const auto mesh = car(1);
  for (double theta : {40.0, 160.0, 300.0}) {
    const auto r = testing::compare_with_oracle(mesh, 20.0, 20.0, theta, 48);
    CHECK(r.compared > 50);
    CHECK(r.vis_rate() >= 0.995);
    CHECK(r.flow_rate() >= 0.995);
    CHECK(r.svis_dominates);
  }
}

TEST_CASE("identity transform: visibility equals the foreground exactly") {
  const auto mesh = std::make_shared<const render::Mesh>(render::make_procedural_object(4, render::ObjectKind::ChairLike));
  const auto cam = render::make_camera(60.0, 15.0, 2.5, 48);
  const auto g = render::rasterize(mesh, cam);
  const auto vis = gt::visibility_map(g, g, 0.0, cam);
  CHECK(vis.m == g.fg);
  const auto flow = gt::gt_flow(g, g, 0.0, cam);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x)
      if (g.fg(y, x) > 0.5f) {
        CHECK(flow.fy(y, x) == doctest::Approx(y).epsilon(1e-3));
        CHECK(flow.fx(y, x) == doctest::Approx(x).epsilon(1e-3));
      }
}

TEST_CASE("visibility is bounded by the target foreground") {
  const auto mesh = car(2);
  const auto cam = render::make_camera(0.0, 20.0, 2.5, 48);
  const auto tgt_cam = render::make_camera(120.0, 20.0, 2.5, 48);
  const auto s = render::rasterize(mesh, cam);
  const auto t = render::rasterize(mesh, tgt_cam);
  const auto svis = gt::symmetry_visibility_map(s, t, 120.0, cam);
  for (std::size_t i = 0; i < svis.m.size(); ++i) CHECK(svis.m.storage()[i] <= t.fg.storage()[i]);
  CHECK_THROWS_AS(gt::visibility_map(s, t, 100.0, cam), Error);
}

TEST_CASE("background mask is the intersection of the backgrounds") {
  const gt::Mask zero{Grid<float>(8, 8, 0.0f)};
  const gt::Mask one{Grid<float>(8, 8, 1.0f)};
  CHECK(gt::background_mask(zero, zero).m == Grid<float>(8, 8, 1.0f));
  CHECK(gt::background_mask(one, zero).m == Grid<float>(8, 8, 0.0f));
  const auto a = rect_mask(8, 0, 3, 0, 3);
  const auto b = rect_mask(8, 5, 8, 4, 8);
  const auto bg = gt::background_mask(a, b);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool in_union = a.m(y, x) > 0.5f || b.m(y, x) > 0.5f;
      CHECK(bg.m(y, x) == (in_union ? 0.0f : 1.0f));
    }
}

TEST_CASE("compositing identities") {
  const Image src = testing::random_image(3, 8, 8, 1);
  const Image afn = testing::random_image(3, 8, 8, 2);
  const gt::VisibilityMap ones{Grid<float>(8, 8, 1.0f)};
  const gt::VisibilityMap zeros{Grid<float>(8, 8, 0.0f)};
  CHECK(gt::mat_visibility(src, ones) == src);
  CHECK(gt::composite_doafn(src, afn, gt::Mask{Grid<float>(8, 8, 1.0f)}, zeros) == src);
  CHECK(gt::composite_doafn(src, afn, gt::Mask{Grid<float>(8, 8, 0.0f)}, ones) == afn);
  // Pixels covered by neither mask are holes and stay zero.
  const auto bg = rect_mask(8, 0, 2, 0, 8);
  gt::VisibilityMap sv{Grid<float>(8, 8, 0.0f)};
  for (int x = 0; x < 8; ++x) sv.m(5, x) = 1.0f;
  const Image c = gt::composite_doafn(src, afn, bg, sv);
  CHECK(c(1, 3, 3) == 0.0f);
  CHECK(gt::hole_fraction(bg, sv) == doctest::Approx(1.0 - 24.0 / 64.0));
  try {
    gt::composite_doafn(src, afn, gt::Mask{Grid<float>(8, 8, 1.0f)}, ones);
    FAIL("overlap must be rejected");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Consistency);
  }
}

TEST_CASE("ground-truth warp reproduces visible target pixels") {
  const auto mesh = car(0);
  const auto cam = render::make_camera(40.0, 20.0, 2.5, 64);
  const auto tcam = render::make_camera(120.0, 20.0, 2.5, 64);
  const auto s = render::rasterize(mesh, cam);
  const auto t = render::rasterize(mesh, tcam);
  const auto flow = gt::gt_flow(s, t, 80.0, cam);
  const auto vis = gt::visibility_map(s, t, 80.0, cam);
  const Image a = gt::mat_visibility(gt::warp(s.rgb, flow), vis);
  const Image b = gt::mat_visibility(t.rgb, vis);
  double err = 0.0;
  std::vector<double> per_pixel;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      double d = 0.0;
      for (int c = 0; c < 3; ++c) d += std::abs(a(c, y, x) - b(c, y, x));
      err += d;
      if (vis.m(y, x) > 0.5f) per_pixel.push_back(d / 3.0);
    }
  CHECK(err / (3.0 * 64 * 64) < 0.02);
  REQUIRE(!per_pixel.empty());
  std::nth_element(per_pixel.begin(), per_pixel.begin() + per_pixel.size() / 2, per_pixel.end());
  CHECK(per_pixel[per_pixel.size() / 2] < 0.02);
}
