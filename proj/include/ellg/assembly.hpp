#pragma once

// Volume finite element matrices. All element integrals are evaluated in
// closed form from barycentric monomial moments, so every matrix is exact
// for the piecewise-polynomial integrand.

#include "ellg/fespace.hpp"

namespace ellg {

namespace detail {
// Integral of lambda_i lambda_j over a tet of volume V.
inline double bary2(double V, int i, int j) { return V * (i == j ? 2.0 : 1.0) / 20.0; }

// Integral of lambda_i lambda_j lambda_k over a tet of volume V:
// 6 V a! b! c! d! / (a+b+c+d+3)! with the multiplicities of {i,j,k}.
inline double bary3(double V, int i, int j, int k) {
  if (i == j && j == k) return V / 20.0;
  if (i == j || j == k || i == k) return V / 60.0;
  return V / 120.0;
}
}  // namespace detail

struct FemMatrices {
  SparseMatrix mass_p1;       // scalar P1 mass, V x V
  SparseMatrix stiffness_p1;  // scalar P1 stiffness, V x V
  SparseMatrix mass_nd;       // Nedelec mass, E x E
  SparseMatrix curl_nd;       // <curl w_e, curl w_f>, E x E
  SparseMatrix coupling;      // <phi_j e_c, w_e>, E x 3V (node-major columns)
  double sigma = 1;
  double mu0 = 1;

  /// Coefficient of the curl-curl form b(., .).
  double curl_coefficient() const { return 1.0 / (sigma * mu0); }
};

/// Kronecker product of a scalar nodal matrix with I_3 in node-major layout.
inline SparseMatrix vector_p1(const SparseMatrix& scalar) {
  std::vector<Triplet> trip;
  trip.reserve(3 * scalar.nonZeros());
  for (Index r = 0; r < scalar.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(scalar, r); it; ++it)
      for (int c = 0; c < 3; ++c) trip.emplace_back(3 * it.row() + c, 3 * it.col() + c, it.value());
  SparseMatrix out(3 * scalar.rows(), 3 * scalar.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

inline FemMatrices assemble_fem(const TetMesh& mesh, double sigma, double mu0) {
  if (!(sigma > 0)) throw InvalidInput("assemble_fem: sigma must be positive inside the magnet");
  if (!(mu0 > 0)) throw InvalidInput("assemble_fem: mu0 must be positive");
  FemMatrices fem;
  fem.sigma = sigma;
  fem.mu0 = mu0;
  std::vector<Triplet> mass, stiff, mnd, cnd, cpl;
  mass.reserve(16 * mesh.tets.size());
  stiff.reserve(16 * mesh.tets.size());
  mnd.reserve(36 * mesh.tets.size());
  cnd.reserve(36 * mesh.tets.size());
  cpl.reserve(72 * mesh.tets.size());
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const TetGeometry g = tet_geometry(mesh, t);
    const auto& tv = mesh.tets[t];
    const double V = g.volume;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        mass.emplace_back(tv[i], tv[j], detail::bary2(V, i, j));
        stiff.emplace_back(tv[i], tv[j], V * g.grad[i].dot(g.grad[j]));
      }
    std::array<std::array<int, 2>, 6> oe;
    std::array<Vec3, 6> curl;
    for (int k = 0; k < 6; ++k) {
      oe[k] = oriented_local_edge(mesh, t, k);
      curl[k] = 2.0 * g.grad[oe[k][0]].cross(g.grad[oe[k][1]]);
    }
    for (int k = 0; k < 6; ++k) {
      const auto [a, b] = oe[k];
      const Index ek = mesh.tet_edges[t][k];
      for (int l = 0; l < 6; ++l) {
        const auto [c, d] = oe[l];
        const Index el = mesh.tet_edges[t][l];
        // (la grad lb - lb grad la) . (lc grad ld - ld grad lc)
        double m = g.grad[b].dot(g.grad[d]) * detail::bary2(V, a, c) -
                   g.grad[b].dot(g.grad[c]) * detail::bary2(V, a, d) -
                   g.grad[a].dot(g.grad[d]) * detail::bary2(V, b, c) +
                   g.grad[a].dot(g.grad[c]) * detail::bary2(V, b, d);
        mnd.emplace_back(ek, el, m);
        cnd.emplace_back(ek, el, V * curl[k].dot(curl[l]));
      }
      for (int j = 0; j < 4; ++j) {
        Vec3 w = g.grad[b] * detail::bary2(V, j, a) - g.grad[a] * detail::bary2(V, j, b);
        for (int c = 0; c < 3; ++c) cpl.emplace_back(ek, 3 * tv[j] + c, w[c]);
      }
    }
  }
  const Index nv = mesh.num_vertices(), ne = mesh.num_edges();
  fem.mass_p1.resize(nv, nv);
  fem.mass_p1.setFromTriplets(mass.begin(), mass.end());
  fem.stiffness_p1.resize(nv, nv);
  fem.stiffness_p1.setFromTriplets(stiff.begin(), stiff.end());
  fem.mass_nd.resize(ne, ne);
  fem.mass_nd.setFromTriplets(mnd.begin(), mnd.end());
  fem.curl_nd.resize(ne, ne);
  fem.curl_nd.setFromTriplets(cnd.begin(), cnd.end());
  fem.coupling.resize(ne, 3 * nv);
  fem.coupling.setFromTriplets(cpl.begin(), cpl.end());
  return fem;
}

/// Matrix of (u, v) -> <m x u, v> on vector P1 with m frozen. Rows index
/// the test function, columns the trial function (node-major). The matrix
/// is exactly skew-symmetric.
inline SparseMatrix assemble_skew(const TetMesh& mesh, const P1VecField& m) {
  if (m.size() != mesh.num_vertices()) throw InvalidInput("assemble_skew: field size does not match mesh");
  std::vector<Triplet> trip;
  trip.reserve(16 * 6 * mesh.tets.size());
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const auto& tv = mesh.tets[t];
    const double V = std::abs(mesh.signed_volume(t));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        Vec3 mw = Vec3::Zero();
        for (int p = 0; p < 4; ++p) mw += detail::bary3(V, p, i, j) * m[tv[p]];
        // (mw x e_c)_d
        const double x = mw[0], y = mw[1], z = mw[2];
        const Index r = 3 * tv[i], c = 3 * tv[j];
        trip.emplace_back(r + 0, c + 1, -z);
        trip.emplace_back(r + 0, c + 2, y);
        trip.emplace_back(r + 1, c + 0, z);
        trip.emplace_back(r + 1, c + 2, -x);
        trip.emplace_back(r + 2, c + 0, -y);
        trip.emplace_back(r + 2, c + 1, x);
      }
  }
  SparseMatrix S(3 * mesh.num_vertices(), 3 * mesh.num_vertices());
  S.setFromTriplets(trip.begin(), trip.end());
  S.prune(0.0);
  return S;
}

/// Operators of the eddy-current step expressed in coupled unknowns.
struct XhSystem {
  SparseMatrix gram;      // Gram matrix of a_h
  SparseMatrix curl;      // b(., .) pulled back to the coupled unknowns
  SparseMatrix system;    // gram + k * curl
  SparseMatrix coupling;  // x-unknowns x 3V: <v, xi>
  double k = 0;
  bool symmetric = true;
};

/// B is the boundary DtN matrix with <DtN_h eta, zeta> = -zeta^T B eta.
inline XhSystem assemble_xh_system(const XhDofMap& dofs, const FemMatrices& fem, const DenseMatrix& B,
                                   double k, bool symmetric = true) {
  if (fem.mass_nd.rows() != dofs.num_edges || B.rows() != dofs.num_boundary_vertices ||
      B.cols() != dofs.num_boundary_vertices)
    throw InvalidInput("assemble_xh_system: dimension mismatch between dof map, FEM and DtN matrices");
  if (k < 0) throw InvalidInput("assemble_xh_system: negative time step");
  const SparseMatrix& PE = dofs.edge_prolongation;
  SparseMatrix PEt = PE.transpose();
  XhSystem sys;
  sys.k = k;
  sys.symmetric = symmetric;
  SparseMatrix vol = PEt * fem.mass_nd * PE;
  std::vector<Triplet> bnd;
  const Index off = dofs.boundary_offset();
  bnd.reserve(B.size());
  for (Index i = 0; i < B.rows(); ++i)
    for (Index j = 0; j < B.cols(); ++j) bnd.emplace_back(off + i, off + j, B(i, j));
  SparseMatrix Bs(dofs.size(), dofs.size());
  Bs.setFromTriplets(bnd.begin(), bnd.end());
  sys.gram = vol + Bs;
  sys.curl = fem.curl_coefficient() * (PEt * fem.curl_nd * PE);
  sys.system = sys.gram + k * sys.curl;
  sys.coupling = PEt * fem.coupling;
  return sys;
}

}  // namespace ellg
