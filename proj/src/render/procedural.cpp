#include "tvsn/render/procedural.hpp"

#include <Eigen/Geometry>
#include <array>
#include <random>

#include "tvsn/core/error.hpp"

namespace tvsn::render {

ObjectKind parse_object_kind(std::string_view name) {
  if (name == "car-like") return ObjectKind::CarLike;
  if (name == "chair-like") return ObjectKind::ChairLike;
  if (name == "block-stack") return ObjectKind::BlockStack;
  fail(ErrorKind::Parameter,
       "unknown object kind '" + std::string(name) + "' (expected car-like, chair-like or block-stack)");
}

std::string to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::CarLike:
      return "car-like";
    case ObjectKind::ChairLike:
      return "chair-like";
    case ObjectKind::BlockStack:
      return "block-stack";
  }
  return "unknown";
}

void add_box(Mesh& mesh, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Eigen::Vector3f& color,
             TextureKind texture) {
  // Each face: outward normal axis/sign and its four corners in CCW order seen
  // from outside.
  struct Face {
    int axis;
    double sign;
  };
  constexpr std::array<Face, 6> faces{{{0, 1.0}, {0, -1.0}, {1, 1.0}, {1, -1.0}, {2, 1.0}, {2, -1.0}}};
  for (const Face& face : faces) {
    const int u = (face.axis + 1) % 3;
    const int v = (face.axis + 2) % 3;
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    n[face.axis] = face.sign;
    const double fixed = face.sign > 0 ? hi[face.axis] : lo[face.axis];
    std::array<Eigen::Vector3d, 4> corners;
    const std::array<std::array<int, 2>, 4> corner_order{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    for (int k = 0; k < 4; ++k) {
      Eigen::Vector3d p;
      p[face.axis] = fixed;
      p[u] = corner_order[k][0] != 0 ? hi[u] : lo[u];
      p[v] = corner_order[k][1] != 0 ? hi[v] : lo[v];
      corners[k] = p;
    }
    // (u, v, axis) is a right-handed cycle, so this order faces +axis.
    if (face.sign < 0) std::swap(corners[1], corners[3]);
    const int base = static_cast<int>(mesh.vertices.size());
    for (int k = 0; k < 4; ++k) {
      mesh.vertices.push_back(corners[k]);
      mesh.normals.push_back(n);
    }
    mesh.triangles.push_back({base, base + 1, base + 2});
    mesh.triangles.push_back({base, base + 2, base + 3});
    for (int k = 0; k < 2; ++k) {
      mesh.albedo.push_back(color);
      mesh.texture.push_back(texture);
    }
  }
}

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  Eigen::Vector3f color() {
    return {static_cast<float>(uniform(0.15, 0.95)), static_cast<float>(uniform(0.15, 0.95)),
            static_cast<float>(uniform(0.15, 0.95))};
  }

 private:
  std::mt19937_64 rng_;
};

// Box spanning [-half_z, half_z] in z (itself mirror symmetric).
void add_centered(Mesh& m, double x0, double x1, double y0, double y1, double half_z, const Eigen::Vector3f& color,
                  TextureKind tex = TextureKind::Flat) {
  add_box(m, {x0, y0, -half_z}, {x1, y1, half_z}, color, tex);
}

// Box at z in [z0, z1] (z0 > 0) plus its mirror image.
void add_mirrored(Mesh& m, double x0, double x1, double y0, double y1, double z0, double z1,
                  const Eigen::Vector3f& color, TextureKind tex = TextureKind::Flat) {
  add_box(m, {x0, y0, z0}, {x1, y1, z1}, color, tex);
  add_box(m, {x0, y0, -z1}, {x1, y1, -z0}, color, tex);
}

Mesh make_car(Sampler& s) {
  Mesh m;
  const double len = s.uniform(0.75, 0.9);
  const double width = s.uniform(0.36, 0.44);
  const double body_lo = s.uniform(-0.32, -0.26);
  const double body_hi = body_lo + s.uniform(0.22, 0.28);
  const Eigen::Vector3f body = s.color();
  Eigen::Vector3f cabin = s.color();
  if ((cabin - body).norm() < 0.3f) cabin = Eigen::Vector3f::Ones() - body;
  const Eigen::Vector3f tire(0.12f, 0.12f, 0.14f);

  add_centered(m, -len, len, body_lo, body_hi, width, body, TextureKind::Waves);
  const double cab_x0 = s.uniform(-0.5, -0.3) * len;
  const double cab_x1 = s.uniform(0.25, 0.45) * len;
  // The cabin floor sits inside the body so no faces are coplanar.
  add_centered(m, cab_x0, cab_x1, body_hi - 0.03, body_hi + s.uniform(0.16, 0.22), width * 0.82, cabin,
               TextureKind::Checker);
  const double wheel_r = s.uniform(0.11, 0.14);
  const double wheel_x = len * s.uniform(0.55, 0.68);
  for (double cx : {-wheel_x, wheel_x}) {
    add_mirrored(m, cx - wheel_r, cx + wheel_r, body_lo - 0.08, body_lo + wheel_r, width - 0.06, width + 0.05,
                 tire);
  }
  if (s.uniform(0.0, 1.0) < 0.5) {
    add_centered(m, -len - 0.04, -len + 0.06, body_hi - 0.02, body_hi + 0.07, width * 0.9, cabin);
  }
  return m;
}

Mesh make_chair(Sampler& s) {
  Mesh m;
  const double half = s.uniform(0.32, 0.42);
  const double seat_y = s.uniform(-0.15, 0.0);
  const double seat_t = s.uniform(0.05, 0.08);
  const double leg = s.uniform(0.05, 0.08);
  const Eigen::Vector3f wood = s.color();
  Eigen::Vector3f cushion = s.color();
  if ((cushion - wood).norm() < 0.3f) cushion = Eigen::Vector3f::Ones() - wood;

  add_centered(m, -half, half, seat_y, seat_y + seat_t, half, cushion, TextureKind::Waves);
  const double floor_y = s.uniform(-0.7, -0.55);
  for (double cx : {-half + 0.02, half - 0.02 - leg}) {
    add_mirrored(m, cx, cx + leg, floor_y, seat_y + 0.01, half - 0.02 - leg, half - 0.02, wood);
  }
  const double back_top = seat_y + s.uniform(0.45, 0.65);
  add_centered(m, -half - 0.005, -half + s.uniform(0.05, 0.08), seat_y + 0.02, back_top, half * 0.95, wood,
               TextureKind::Waves);
  if (s.uniform(0.0, 1.0) < 0.5) {
    add_mirrored(m, -half + 0.1, half - 0.05, seat_y + 0.18, seat_y + 0.23, half - 0.06, half + 0.01, cushion);
  }
  return m;
}

Mesh make_blocks(Sampler& s) {
  Mesh m;
  const int count = 2 + static_cast<int>(s.uniform(0.0, 2.999));
  double y = -0.6;
  Eigen::Vector3f prev = s.color();
  for (int i = 0; i < count; ++i) {
    const double h = s.uniform(0.15, 0.3);
    const double hx = s.uniform(0.2, 0.6);
    const double hz = s.uniform(0.2, 0.55);
    const double off = s.uniform(-0.2, 0.2);
    Eigen::Vector3f color = s.color();
    if ((color - prev).norm() < 0.3f) color = Eigen::Vector3f::Ones() - prev;
    // Overlap with the block below so faces are never coplanar.
    add_centered(m, off - hx, off + hx, y - (i > 0 ? 0.02 : 0.0), y + h, hz, color,
                 i % 2 == 0 ? TextureKind::Waves : TextureKind::Checker);
    prev = color;
    y += h;
  }
  return m;
}

}  // namespace

Mesh make_procedural_object(std::uint64_t seed, ObjectKind kind) {
  Sampler s(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(kind) + 1);
  switch (kind) {
    case ObjectKind::CarLike:
      return make_car(s);
    case ObjectKind::ChairLike:
      return make_chair(s);
    case ObjectKind::BlockStack:
      return make_blocks(s);
  }
  fail(ErrorKind::Parameter, "unknown object kind");
}

}  // namespace tvsn::render
