#pragma once

// Tetrahedral volume meshes and closed triangulated surfaces.

#include "ellg/common.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>

namespace ellg {

/// Closed, outward-oriented surface triangulation.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 3>> triangles;
  std::vector<double> areas;
  std::vector<Vec3> normals;

  Index num_vertices() const { return static_cast<Index>(vertices.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles.size()); }

  /// Recomputes the cached per-triangle area and unit normal.
  void update_geometry() {
    areas.resize(triangles.size());
    normals.resize(triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      const auto& tri = triangles[t];
      Vec3 c = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
      double n = c.norm();
      areas[t] = 0.5 * n;
      normals[t] = n > 0 ? Vec3(c / n) : Vec3::Zero();
    }
  }

  double total_area() const {
    double a = 0;
    for (double x : areas) a += x;
    return a;
  }

  Vec3 centroid(Index t) const {
    const auto& tri = triangles[t];
    return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
  }

  /// True when every undirected edge is shared by exactly two triangles
  /// traversing it in opposite directions.
  bool is_closed() const {
    std::map<std::pair<Index, Index>, int> directed;
    for (const auto& tri : triangles) {
      for (int k = 0; k < 3; ++k) ++directed[{tri[k], tri[(k + 1) % 3]}];
    }
    for (const auto& [e, count] : directed) {
      if (count != 1) return false;
      auto it = directed.find({e.second, e.first});
      if (it == directed.end() || it->second != 1) return false;
    }
    return true;
  }
};

/// Tetrahedral mesh with the connectivity needed for nodal, edge and
/// boundary spaces. Edges are sorted vertex pairs, globally oriented from the
/// lower to the higher vertex index.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 4>> tets;
  std::vector<std::array<Index, 2>> edges;  // sorted lexicographically
  std::vector<std::array<Index, 6>> tet_edges;
  std::size_t face_count = 0;  // all distinct triangular faces

  // Filled by extract_boundary().
  std::vector<std::array<Index, 3>> boundary_faces;  // mesh vertex indices, outward
  std::vector<Index> boundary_vertices;              // boundary index -> mesh vertex
  std::vector<Index> vertex_to_boundary;             // mesh vertex -> boundary index or -1
  std::vector<Index> boundary_edges;                 // edge indices lying on the boundary
  std::vector<char> edge_on_boundary;

  double h = 0;  // nominal mesh size

  Index num_vertices() const { return static_cast<Index>(vertices.size()); }
  Index num_tets() const { return static_cast<Index>(tets.size()); }
  Index num_edges() const { return static_cast<Index>(edges.size()); }
  bool has_boundary() const { return !boundary_faces.empty(); }

  /// Local vertex pairs of the six tetrahedron edges, in tet_edges order.
  static constexpr std::array<std::array<int, 2>, 6> local_edges{
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

  /// Edge index of the (unordered) vertex pair, or -1.
  Index edge_index(Index a, Index b) const {
    std::array<Index, 2> key{std::min(a, b), std::max(a, b)};
    auto it = std::lower_bound(edges.begin(), edges.end(), key);
    if (it == edges.end() || *it != key) return -1;
    return static_cast<Index>(it - edges.begin());
  }

  double signed_volume(Index t) const {
    const auto& v = tets[t];
    const Vec3& p0 = vertices[v[0]];
    return (vertices[v[1]] - p0).dot((vertices[v[2]] - p0).cross(vertices[v[3]] - p0)) / 6.0;
  }

  Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : vertices) c += p;
    return c / static_cast<double>(vertices.size());
  }

  /// Builds edges and tet_edges from tets.
  void build_edges() {
    edges.clear();
    edges.reserve(tets.size() * 6);
    for (const auto& t : tets) {
      for (const auto& le : local_edges) {
        Index a = t[le[0]], b = t[le[1]];
        edges.push_back({std::min(a, b), std::max(a, b)});
      }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    tet_edges.resize(tets.size());
    for (std::size_t t = 0; t < tets.size(); ++t) {
      for (int k = 0; k < 6; ++k) {
        tet_edges[t][k] = edge_index(tets[t][local_edges[k][0]], tets[t][local_edges[k][1]]);
      }
    }
  }
};

TriMesh extract_boundary(TetMesh& mesh);

/// Structured mesh of the unit cube with n subdivisions per axis. Each
/// subcube is split into six tetrahedra around its main diagonal (Kuhn
/// split), identically in every subcube, so neighbouring faces match.
inline TetMesh build_cube_mesh(int n) {
  if (n < 1) throw InvalidInput("build_cube_mesh: subdivisions must be >= 1, got " + std::to_string(n));
  TetMesh mesh;
  const int np = n + 1;
  auto id = [np](int i, int j, int k) { return static_cast<Index>(i + np * (j + np * k)); };
  mesh.vertices.reserve(static_cast<std::size_t>(np) * np * np);
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        mesh.vertices.emplace_back(double(i) / n, double(j) / n, double(k) / n);

  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  mesh.tets.reserve(6u * n * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          std::array<Index, 4> t{};
          t[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            t[s + 1] = id(c[0], c[1], c[2]);
          }
          mesh.tets.push_back(t);
        }
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    if (mesh.signed_volume(t) < 0) std::swap(mesh.tets[t][2], mesh.tets[t][3]);
  }
  mesh.h = 1.0 / n;
  mesh.build_edges();
  extract_boundary(mesh);
  return mesh;
}

/// Returns the boundary triangulation (boundary-local vertex numbering,
/// outward orientation) and stores the boundary maps back into the mesh.
inline TriMesh extract_boundary(TetMesh& mesh) {
  struct FaceInfo {
    int count = 0;
    Index tet = -1;
    int opposite = -1;
  };
  std::map<std::array<Index, 3>, FaceInfo> faces;
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const auto& tv = mesh.tets[t];
    for (int o = 0; o < 4; ++o) {
      std::array<Index, 3> f{};
      for (int s = 0, w = 0; s < 4; ++s)
        if (s != o) f[w++] = tv[s];
      std::sort(f.begin(), f.end());
      auto& info = faces[f];
      ++info.count;
      info.tet = t;
      info.opposite = o;
    }
  }
  mesh.face_count = faces.size();
  mesh.boundary_faces.clear();
  for (const auto& [key, info] : faces) {
    if (info.count > 2)
      throw InvalidInput("extract_boundary: face shared by " + std::to_string(info.count) +
                         " tetrahedra (non-manifold mesh)");
    if (info.count != 1) continue;
    const auto& tv = mesh.tets[info.tet];
    std::array<Index, 3> f{};
    for (int s = 0, w = 0; s < 4; ++s)
      if (s != info.opposite) f[w++] = tv[s];
    const Vec3& a = mesh.vertices[f[0]];
    Vec3 nrm = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a);
    if (nrm.dot(mesh.vertices[tv[info.opposite]] - a) > 0) std::swap(f[1], f[2]);
    mesh.boundary_faces.push_back(f);
  }

  mesh.vertex_to_boundary.assign(mesh.vertices.size(), -1);
  mesh.boundary_vertices.clear();
  for (const auto& f : mesh.boundary_faces)
    for (Index v : f) mesh.vertex_to_boundary[v] = 0;
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.vertex_to_boundary[v] >= 0) {
      mesh.vertex_to_boundary[v] = static_cast<Index>(mesh.boundary_vertices.size());
      mesh.boundary_vertices.push_back(v);
    }
  }
  mesh.edge_on_boundary.assign(mesh.edges.size(), 0);
  for (const auto& f : mesh.boundary_faces)
    for (int k = 0; k < 3; ++k) mesh.edge_on_boundary[mesh.edge_index(f[k], f[(k + 1) % 3])] = 1;
  mesh.boundary_edges.clear();
  for (Index e = 0; e < mesh.num_edges(); ++e)
    if (mesh.edge_on_boundary[e]) mesh.boundary_edges.push_back(e);

  TriMesh surface;
  surface.vertices.reserve(mesh.boundary_vertices.size());
  for (Index v : mesh.boundary_vertices) surface.vertices.push_back(mesh.vertices[v]);
  surface.triangles.reserve(mesh.boundary_faces.size());
  for (const auto& f : mesh.boundary_faces)
    surface.triangles.push_back({mesh.vertex_to_boundary[f[0]], mesh.vertex_to_boundary[f[1]],
                                 mesh.vertex_to_boundary[f[2]]});
  surface.update_geometry();
  return surface;
}

/// Icosahedron refined `refinements` times with vertices projected onto the
/// sphere of the given radius centred at the origin.
inline TriMesh build_icosphere(int refinements, double radius) {
  if (refinements < 0 || refinements > 6)
    throw InvalidInput("build_icosphere: refinements must be in [0, 6], got " + std::to_string(refinements));
  if (!(radius > 0)) throw InvalidInput("build_icosphere: radius must be positive");
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh s;
  s.vertices = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
  s.triangles = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (auto& v : s.vertices) v.normalize();
  for (int r = 0; r < refinements; ++r) {
    std::map<std::pair<Index, Index>, Index> mid;
    auto midpoint = [&](Index a, Index b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      Index idx = static_cast<Index>(s.vertices.size());
      s.vertices.push_back((s.vertices[a] + s.vertices[b]).normalized());
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<Index, 3>> next;
    next.reserve(s.triangles.size() * 4);
    for (const auto& t : s.triangles) {
      Index ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    s.triangles = std::move(next);
  }
  for (auto& v : s.vertices) v *= radius;
  s.update_geometry();
  return s;
}

struct MeshQuality {
  double min_dihedral_deg = 0;
  double max_dihedral_deg = 0;
  double max_h = 0;
  double max_shape_ratio = 0;  // max over tets of h_T / rho_T

  bool shape_regular(double threshold) const { return max_shape_ratio <= threshold; }
};

/// Per-tet diameter, inradius and dihedral angles, reduced over the mesh.
inline MeshQuality mesh_quality(const TetMesh& mesh) {
  MeshQuality q;
  q.min_dihedral_deg = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const auto& tv = mesh.tets[t];
    std::array<Vec3, 4> p{mesh.vertices[tv[0]], mesh.vertices[tv[1]], mesh.vertices[tv[2]],
                          mesh.vertices[tv[3]]};
    double hT = 0;
    for (const auto& le : TetMesh::local_edges) hT = std::max(hT, (p[le[0]] - p[le[1]]).norm());
    // Outward normals of the face opposite each vertex.
    std::array<Vec3, 4> nrm;
    double surface = 0;
    for (int o = 0; o < 4; ++o) {
      std::array<int, 3> f{};
      for (int s = 0, w = 0; s < 4; ++s)
        if (s != o) f[w++] = s;
      Vec3 c = (p[f[1]] - p[f[0]]).cross(p[f[2]] - p[f[0]]);
      if (c.dot(p[o] - p[f[0]]) > 0) c = -c;
      surface += 0.5 * c.norm();
      nrm[o] = c.normalized();
    }
    double vol = std::abs(mesh.signed_volume(t));
    double rho = 3.0 * vol / surface;
    double ratio = rho > 0 ? hT / rho : std::numeric_limits<double>::infinity();
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        double c = std::clamp(-nrm[a].dot(nrm[b]), -1.0, 1.0);
        double ang = std::acos(c) * 180.0 / pi;
        q.min_dihedral_deg = std::min(q.min_dihedral_deg, ang);
        q.max_dihedral_deg = std::max(q.max_dihedral_deg, ang);
      }
    q.max_h = std::max(q.max_h, hT);
    q.max_shape_ratio = std::max(q.max_shape_ratio, ratio);
  }
  return q;
}

}  // namespace ellg
