#include "tvsn/render/obj.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tvsn/core/error.hpp"

namespace tvsn::render {

namespace {

struct Corner {
  long vertex;
  std::optional<long> normal;
};

[[noreturn]] void parse_error(const std::string& source, int line, const std::string& what) {
  fail(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + what);
}

long parse_index(std::string_view tok, const std::string& source, int line) {
  long value = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || value == 0) {
    parse_error(source, line, "bad face index '" + std::string(tok) + "'");
  }
  return value;
}

Corner parse_corner(const std::string& tok, const std::string& source, int line) {
  Corner c{};
  const auto s1 = tok.find('/');
  c.vertex = parse_index(std::string_view(tok).substr(0, s1), source, line);
  if (s1 != std::string::npos) {
    const auto s2 = tok.find('/', s1 + 1);
    if (s2 != std::string::npos && s2 + 1 < tok.size()) {
      c.normal = parse_index(std::string_view(tok).substr(s2 + 1), source, line);
    }
  }
  return c;
}

// OBJ indices are 1-based; negative values count back from the end.
int resolve(long idx, std::size_t count, const char* what, int line, const std::string& source) {
  const long n = static_cast<long>(count);
  const long zero_based = idx > 0 ? idx - 1 : n + idx;
  if (zero_based < 0 || zero_based >= n) {
    fail(ErrorKind::Format, source + ":" + std::to_string(line) + ": " + what + " index " + std::to_string(idx) +
                                " out of range (have " + std::to_string(n) + ")");
  }
  return static_cast<int>(zero_based);
}

Eigen::Vector3d read_vec3(std::istringstream& ss, const std::string& source, int line) {
  Eigen::Vector3d v;
  if (!(ss >> v.x() >> v.y() >> v.z()) || !v.allFinite()) parse_error(source, line, "expected three numbers");
  return v;
}

}  // namespace

Mesh parse_obj(std::istream& in, const std::string& source) {
  Mesh mesh;
  std::vector<Eigen::Vector3d> vn;
  struct PendingFace {
    std::vector<Corner> corners;
    int line;
  };
  std::vector<PendingFace> faces;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    std::istringstream ss(text);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      mesh.vertices.push_back(read_vec3(ss, source, line));
    } else if (tag == "vn") {
      vn.push_back(read_vec3(ss, source, line));
    } else if (tag == "f") {
      PendingFace face{{}, line};
      std::string tok;
      while (ss >> tok) face.corners.push_back(parse_corner(tok, source, line));
      if (face.corners.size() < 3) parse_error(source, line, "face needs at least 3 vertices");
      faces.push_back(std::move(face));
    }
  }

  std::vector<std::optional<Eigen::Vector3d>> assigned(mesh.vertices.size());
  for (const auto& face : faces) {
    std::vector<int> idx;
    for (const auto& c : face.corners) {
      const int v = resolve(c.vertex, mesh.vertices.size(), "vertex", face.line, source);
      idx.push_back(v);
      if (c.normal) assigned[v] = vn[resolve(*c.normal, vn.size(), "normal", face.line, source)];
    }
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
      mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
      mesh.albedo.emplace_back(0.7f, 0.7f, 0.7f);
      mesh.texture.push_back(TextureKind::Flat);
    }
  }

  bool all_assigned = !assigned.empty();
  for (const auto& a : assigned) all_assigned = all_assigned && a.has_value() && a->norm() > 0.0;
  if (all_assigned) {
    for (const auto& a : assigned) mesh.normals.push_back(a->normalized());
  } else {
    compute_vertex_normals(mesh);
  }

  double extent = 0.0;
  for (const auto& v : mesh.vertices) extent = std::max(extent, v.cwiseAbs().maxCoeff());
  if (extent > 1.0) {
    for (auto& v : mesh.vertices) v /= extent;
  }
  validate_mesh(mesh);
  return mesh;
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open OBJ file: " + path.string());
  return parse_obj(in, path.string());
}

}  // namespace tvsn::render
