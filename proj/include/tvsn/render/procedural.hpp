#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tvsn/render/mesh.hpp"

namespace tvsn::render {

enum class ObjectKind { CarLike, ChairLike, BlockStack };

// "car-like", "chair-like", "block-stack"; anything else is a parameter error.
ObjectKind parse_object_kind(std::string_view name);
std::string to_string(ObjectKind kind);

// Deterministic in (seed, kind). Output is a union of closed boxes, mirror
// symmetric across z = 0 (geometry and texture), inside [-1,1]^3, with at least
// two distinct albedo colors.
Mesh make_procedural_object(std::uint64_t seed, ObjectKind kind);

// Appends a closed axis-aligned box with outward-facing, per-face normals.
void add_box(Mesh& mesh, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Eigen::Vector3f& color,
             TextureKind texture = TextureKind::Flat);

}  // namespace tvsn::render
