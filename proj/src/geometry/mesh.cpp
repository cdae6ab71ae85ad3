// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/geometry/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

#include "lidarworld/core/error.hpp"

namespace lidarworld::geometry {

Aabb TriMesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.expand(v);
  return box;
}

Vec3 TriMesh::triangle_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

double TriMesh::signed_volume() const {
  double vol = 0.0;
  for (const auto& tri : triangles)
    vol += vertices[tri[0]].dot(vertices[tri[1]].cross(vertices[tri[2]]));
  return vol / 6.0;
}

void TriMesh::validate() const {
  const auto n = vertices.size();
  for (const auto& v : vertices)
    if (!v.allFinite()) throw InvalidArgument("mesh vertex is not finite");
  for (const auto& tri : triangles) {
    if (tri[0] >= n || tri[1] >= n || tri[2] >= n)
      throw InvalidArgument("mesh triangle index out of range");
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw InvalidArgument("mesh triangle repeats a vertex index");
  }
  if (!labels.empty() && labels.size() != triangles.size())
    throw InvalidArgument("mesh label count does not match triangle count");
}

void TriMesh::append(const TriMesh& other, std::int32_t label) {
  const auto offset = static_cast<std::uint32_t>(vertices.size());
  const bool had_labels = !labels.empty() || triangles.empty();
  if (!had_labels) labels.assign(triangles.size(), 0);
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const auto& tri : other.triangles)
    triangles.push_back({tri[0] + offset, tri[1] + offset, tri[2] + offset});
  if (other.labels.empty())
    labels.insert(labels.end(), other.triangles.size(), label);
  else
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

TriMesh transform_mesh(const TriMesh& mesh, const Pose& pose) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = pose.apply(v);
  return out;
}

TriMesh make_box_mesh(const Vec3& c, const Vec3& h) {
  TriMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back(c.x() + ((i & 1) ? h.x() : -h.x()), c.y() + ((i & 2) ? h.y() : -h.y()),
                            c.z() + ((i & 4) ? h.z() : -h.z()));
  // Outward-facing winding, two triangles per face.
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6},   // -z, +z
                 {0, 1, 4}, {1, 5, 4}, {2, 6, 3}, {3, 6, 7},   // -y, +y
                 {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};  // -x, +x
  return m;
}

TriMesh make_quad_mesh(const Vec2& lo, const Vec2& hi, double height) {
  TriMesh m;
  m.vertices = {{lo.x(), lo.y(), height}, {hi.x(), lo.y(), height},
                {hi.x(), hi.y(), height}, {lo.x(), hi.y(), height}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

TriMesh make_uv_sphere(const Vec3& center, double radius, int stacks, int slices) {
  if (stacks < 2 || slices < 3 || !(radius > 0.0))
    throw InvalidArgument("uv sphere needs stacks >= 2, slices >= 3, radius > 0");
  TriMesh m;
  m.vertices.push_back(center + Vec3(0, 0, radius));
  for (int i = 1; i < stacks; ++i) {
    const double phi = std::numbers::pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / slices;
      m.vertices.push_back(center + radius * Vec3(std::sin(phi) * std::cos(theta),
                                                  std::sin(phi) * std::sin(theta), std::cos(phi)));
    }
  }
  m.vertices.push_back(center - Vec3(0, 0, radius));
  const auto ring = [&](int i, int j) {
    return static_cast<std::uint32_t>(1 + (i - 1) * slices + (j % slices));
  };
  const auto south = static_cast<std::uint32_t>(m.vertices.size() - 1);
  for (int j = 0; j < slices; ++j) m.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i + 1 < stacks; ++i)
    for (int j = 0; j < slices; ++j) {
      m.triangles.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      m.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  for (int j = 0; j < slices; ++j)
    m.triangles.push_back({ring(stacks - 1, j), south, ring(stacks - 1, j + 1)});
  return m;
}

void write_obj(std::ostream& os, const TriMesh& mesh) {
  os << std::setprecision(17);
  for (const auto& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles)
    os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

TriMesh read_obj(std::istream& is) {
  TriMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw FormatError("OBJ line " + std::to_string(line_no) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (ls >> tok) {
        const long i = std::stol(tok.substr(0, tok.find('/')));
        const long resolved = i < 0 ? static_cast<long>(mesh.vertices.size()) + i : i - 1;
        if (resolved < 0) throw FormatError("OBJ line " + std::to_string(line_no) + ": bad index");
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (idx.size() < 3) throw FormatError("OBJ line " + std::to_string(line_no) + ": short face");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k)
        mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  try {
    mesh.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("OBJ: ") + e.what());
  }
  return mesh;
}

void save_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_obj(os, mesh);
}

TriMesh load_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  return read_obj(is);
}

}  // namespace lidarworld::geometry
