#pragma once

#include <filesystem>
#include <istream>

#include "tvsn/render/mesh.hpp"

namespace tvsn::render {

// Wavefront OBJ subset: `v`, `vn` and `f` records (`i`, `i/t`, `i//n`, `i/t/n`,
// negative indices allowed). Polygons are fan-triangulated. Other record types
// are ignored. Per-vertex normals come from `vn` references when every vertex
// has one, otherwise from area-weighted face normals. Meshes that leave the
// [-1,1]^3 box are scaled uniformly about the origin to fit.
Mesh load_obj(const std::filesystem::path& path);
Mesh parse_obj(std::istream& in, const std::string& source_name = "<stream>");

}  // namespace tvsn::render
