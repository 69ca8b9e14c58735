#pragma once

// Discrete spaces: P1 nodal fields, lowest-order Nedelec (Whitney) edge
// fields, the coupled interior-edge / boundary-node space for (H, lambda),
// and nodal tangent frames for the magnetization constraint.

#include "ellg/mesh.hpp"
#include "ellg/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>

namespace ellg {

/// One 3-vector per mesh vertex.
struct P1VecField {
  std::vector<Vec3> values;

  P1VecField() = default;
  explicit P1VecField(Index n, const Vec3& fill = Vec3::Zero()) : values(n, fill) {}

  Index size() const { return static_cast<Index>(values.size()); }
  const Vec3& operator[](Index i) const { return values[i]; }
  Vec3& operator[](Index i) { return values[i]; }

  /// Node-major flat layout: entry 3*z + c.
  Vector flat() const {
    Vector x(3 * values.size());
    for (std::size_t z = 0; z < values.size(); ++z) x.segment<3>(3 * z) = values[z];
    return x;
  }
  static P1VecField from_flat(const Vector& x) {
    P1VecField f(static_cast<Index>(x.size() / 3));
    for (Index z = 0; z < f.size(); ++z) f[z] = x.segment<3>(3 * z);
    return f;
  }
};

/// Circulation coefficients of a Whitney edge field, one per mesh edge.
struct EdgeField {
  Vector coefficients;
};

/// Barycentric gradients and volume of one tetrahedron.
struct TetGeometry {
  std::array<Vec3, 4> grad;
  double volume = 0;
};

inline TetGeometry tet_geometry(const TetMesh& mesh, Index t) {
  const auto& tv = mesh.tets[t];
  const Vec3& p0 = mesh.vertices[tv[0]];
  Eigen::Matrix3d J;
  J.col(0) = mesh.vertices[tv[1]] - p0;
  J.col(1) = mesh.vertices[tv[2]] - p0;
  J.col(2) = mesh.vertices[tv[3]] - p0;
  TetGeometry g;
  g.volume = J.determinant() / 6.0;
  Eigen::Matrix3d inv = J.inverse();
  g.grad[1] = inv.row(0).transpose();
  g.grad[2] = inv.row(1).transpose();
  g.grad[3] = inv.row(2).transpose();
  g.grad[0] = -(g.grad[1] + g.grad[2] + g.grad[3]);
  return g;
}

/// Local vertex indices (tail, head) of local edge k under the global
/// low-to-high orientation.
inline std::array<int, 2> oriented_local_edge(const TetMesh& mesh, Index t, int k) {
  auto le = TetMesh::local_edges[k];
  if (mesh.tets[t][le[0]] > mesh.tets[t][le[1]]) std::swap(le[0], le[1]);
  return {le[0], le[1]};
}

inline P1VecField interpolate_nodal(const std::function<Vec3(const Vec3&)>& f, const TetMesh& mesh) {
  P1VecField out(mesh.num_vertices());
  for (Index z = 0; z < mesh.num_vertices(); ++z) out[z] = f(mesh.vertices[z]);
  return out;
}

/// Edge circulations of F along each globally oriented edge, by Gauss rule.
inline EdgeField interpolate_edge(const std::function<Vec3(const Vec3&)>& F, const TetMesh& mesh,
                                  int gauss_points = 3) {
  gauss_points = std::max(gauss_points, 2);
  const auto& g = quadrature::cached_gauss(gauss_points);
  EdgeField out;
  out.coefficients.resize(mesh.num_edges());
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const Vec3& a = mesh.vertices[mesh.edges[e][0]];
    const Vec3 d = mesh.vertices[mesh.edges[e][1]] - a;
    double s = 0;
    for (int q = 0; q < gauss_points; ++q) s += g.weights[q] * F(a + g.points[q] * d).dot(d);
    out.coefficients[e] = s;
  }
  return out;
}

/// Value of an edge field inside tet t at the given barycentric point.
inline Vec3 evaluate_edge_field(const TetMesh& mesh, const Vector& coeffs, Index t,
                                const std::array<double, 4>& bary) {
  TetGeometry g = tet_geometry(mesh, t);
  Vec3 v = Vec3::Zero();
  for (int k = 0; k < 6; ++k) {
    auto [a, b] = oriented_local_edge(mesh, t, k);
    v += coeffs[mesh.tet_edges[t][k]] * (bary[a] * g.grad[b] - bary[b] * g.grad[a]);
  }
  return v;
}

/// Curl of an edge field on tet t (constant per tet).
inline Vec3 edge_field_curl(const TetMesh& mesh, const Vector& coeffs, Index t) {
  TetGeometry g = tet_geometry(mesh, t);
  Vec3 c = Vec3::Zero();
  for (int k = 0; k < 6; ++k) {
    auto [a, b] = oriented_local_edge(mesh, t, k);
    c += coeffs[mesh.tet_edges[t][k]] * 2.0 * g.grad[a].cross(g.grad[b]);
  }
  return c;
}

/// Discrete gradient, E x V: row e = (a, b) holds -1 at a and +1 at b, so
/// G phi are the edge circulations of grad phi for nodal phi.
inline SparseMatrix gradient_matrix(const TetMesh& mesh) {
  std::vector<Triplet> trip;
  trip.reserve(2 * mesh.edges.size());
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    trip.emplace_back(e, mesh.edges[e][0], -1.0);
    trip.emplace_back(e, mesh.edges[e][1], 1.0);
  }
  SparseMatrix G(mesh.num_edges(), mesh.num_vertices());
  G.setFromTriplets(trip.begin(), trip.end());
  return G;
}

/// Unknown ordering of the coupled space: interior-edge circulations first,
/// then boundary-vertex values of the exterior potential trace. Boundary
/// edge circulations are not unknowns; for a boundary edge oriented from
/// tail to head, its circulation is zeta(head) - zeta(tail).
struct XhDofMap {
  Index num_edges = 0;
  Index num_boundary_vertices = 0;
  std::vector<Index> interior_edges;   // unknown -> edge
  std::vector<Index> edge_to_unknown;  // edge -> unknown or -1
  /// (num_edges + num_boundary_vertices) x size() prolongation onto full
  /// Nedelec coefficients stacked over boundary nodal values.
  SparseMatrix prolongation;
  SparseMatrix edge_prolongation;      // first num_edges rows
  SparseMatrix boundary_prolongation;  // last num_boundary_vertices rows

  Index num_interior() const { return static_cast<Index>(interior_edges.size()); }
  Index size() const { return num_interior() + num_boundary_vertices; }
  Index boundary_offset() const { return num_interior(); }

  Vector edge_coefficients(const Vector& x) const { return edge_prolongation * x; }
  Vector boundary_values(const Vector& x) const { return x.tail(num_boundary_vertices); }

  /// Packs a pair (full edge coefficients, boundary values) into unknowns.
  /// Boundary-edge coefficients are dropped; the pair is expected to be
  /// compatible.
  Vector pack(const Vector& edge_coeffs, const Vector& boundary) const {
    Vector x(size());
    for (Index u = 0; u < num_interior(); ++u) x[u] = edge_coeffs[interior_edges[u]];
    x.tail(num_boundary_vertices) = boundary;
    return x;
  }
};

inline XhDofMap build_xh_dofmap(const TetMesh& mesh) {
  if (!mesh.has_boundary() || mesh.edge_on_boundary.size() != mesh.edges.size())
    throw InvalidInput("build_xh_dofmap: mesh has no boundary maps (call extract_boundary first)");
  XhDofMap map;
  map.num_edges = mesh.num_edges();
  map.num_boundary_vertices = static_cast<Index>(mesh.boundary_vertices.size());
  map.edge_to_unknown.assign(mesh.edges.size(), -1);
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    if (!mesh.edge_on_boundary[e]) {
      map.edge_to_unknown[e] = map.num_interior();
      map.interior_edges.push_back(e);
    }
  }
  const Index off = map.num_interior();
  std::vector<Triplet> trip;
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    if (map.edge_to_unknown[e] >= 0) {
      trip.emplace_back(e, map.edge_to_unknown[e], 1.0);
    } else {
      Index tail = mesh.vertex_to_boundary[mesh.edges[e][0]];
      Index head = mesh.vertex_to_boundary[mesh.edges[e][1]];
      trip.emplace_back(e, off + head, 1.0);
      trip.emplace_back(e, off + tail, -1.0);
    }
  }
  for (Index b = 0; b < map.num_boundary_vertices; ++b) trip.emplace_back(map.num_edges + b, off + b, 1.0);
  map.prolongation.resize(map.num_edges + map.num_boundary_vertices, map.size());
  map.prolongation.setFromTriplets(trip.begin(), trip.end());
  map.edge_prolongation = map.prolongation.topRows(map.num_edges);
  map.boundary_prolongation = map.prolongation.bottomRows(map.num_boundary_vertices);
  return map;
}

/// Per-vertex orthonormal basis (t1, t2) of the plane orthogonal to m(z).
struct TangentFrame {
  std::vector<Vec3> t1;
  std::vector<Vec3> t2;

  Index size() const { return static_cast<Index>(t1.size()); }

  /// 3V x 2V matrix mapping tangent coordinates (a_z, b_z) to the nodal
  /// vector a_z t1(z) + b_z t2(z).
  SparseMatrix basis() const {
    std::vector<Triplet> trip;
    trip.reserve(6 * t1.size());
    for (Index z = 0; z < size(); ++z)
      for (int c = 0; c < 3; ++c) {
        trip.emplace_back(3 * z + c, 2 * z, t1[z][c]);
        trip.emplace_back(3 * z + c, 2 * z + 1, t2[z][c]);
      }
    SparseMatrix Q(3 * size(), 2 * size());
    Q.setFromTriplets(trip.begin(), trip.end());
    return Q;
  }

  P1VecField expand(const Vector& coords) const {
    P1VecField v(size());
    for (Index z = 0; z < size(); ++z) v[z] = coords[2 * z] * t1[z] + coords[2 * z + 1] * t2[z];
    return v;
  }
};

/// t1 is the canonical axis least aligned with m, projected onto the plane
/// orthogonal to m and normalised; t2 = m x t1 / |m|. Ties pick the lowest
/// axis index.
inline TangentFrame tangent_frames(const P1VecField& m) {
  TangentFrame f;
  f.t1.resize(m.values.size());
  f.t2.resize(m.values.size());
  for (Index z = 0; z < m.size(); ++z) {
    double len = m[z].norm();
    if (!(len > 0.1))
      throw InvalidInput("tangent_frames: |m| = " + std::to_string(len) + " too small at vertex " +
                         std::to_string(z));
    Vec3 u = m[z] / len;
    int axis = 0;
    for (int c = 1; c < 3; ++c)
      if (std::abs(u[c]) < std::abs(u[axis])) axis = c;
    Vec3 a = Vec3::Unit(axis);
    Vec3 t1 = (a - a.dot(u) * u).normalized();
    f.t1[z] = t1;
    f.t2[z] = u.cross(t1).normalized();
  }
  return f;
}

}  // namespace ellg
