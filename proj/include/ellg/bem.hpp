#pragma once

// Galerkin boundary elements for the Laplace kernel G(x,y) = 1/(4 pi |x-y|)
// on a closed, flat-panel surface: single layer V (P0 x P0), double layer K
// (P0 x P1), boundary mass M (P0 x P1), hypersingular W (P1 x P1) and the
// discrete exterior Dirichlet-to-Neumann matrix B with
// <DtN_h eta, zeta> = -zeta^T B eta.
//
// K is the Galerkin matrix of the principal-value double layer, which is the
// interior trace of the double-layer potential plus 1/2.

#include "ellg/mesh.hpp"
#include "ellg/quadrature.hpp"
#include "ellg/solver.hpp"

#include <array>
#include <cmath>
#include <optional>

namespace ellg {

enum class DtnKind { Costabel, JohnsonNedelec };

inline const char* to_string(DtnKind k) {
  return k == DtnKind::Costabel ? "costabel" : "johnson-nedelec";
}

struct QuadratureOrders {
  int regular = 4;   // Gauss points per direction, well-separated panels
  int near = 6;      // same, for close but disjoint panels
  int singular = 4;  // points per direction of the 4D Sauter-Schwab rules
  double near_factor = 1.5;  // "close": centroid distance < near_factor * diameter

  QuadratureOrders doubled() const { return {2 * regular, 2 * near, 2 * singular, near_factor}; }
};

struct BemOperators {
  DenseMatrix V;  // <V chi_q, chi_p>
  DenseMatrix K;  // <K phi_j, chi_p>
  DenseMatrix M;  // <phi_j, chi_p>
  DenseMatrix W;  // <W phi_j, phi_i>
  DenseMatrix B;  // DtN matrix (filled by assemble_dtn)
  DtnKind kind = DtnKind::Costabel;
  double v_condition = 0;
  std::string warning;
};

namespace bem_detail {

// How two panels touch, and vertex orderings that put the shared vertices
// first in matching order.
struct PairTopology {
  int shared = 0;  // 0 regular, 1 vertex, 2 edge, 3 identical
  std::array<int, 3> perm_p{0, 1, 2};
  std::array<int, 3> perm_q{0, 1, 2};
};

inline PairTopology classify(const TriMesh& s, Index p, Index q) {
  PairTopology t;
  const auto& a = s.triangles[p];
  const auto& b = s.triangles[q];
  if (p == q) {
    t.shared = 3;
    return t;
  }
  std::array<int, 3> ip{}, iq{};
  int n = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (a[i] == b[j]) {
        ip[n] = i;
        iq[n] = j;
        ++n;
      }
  t.shared = n;
  if (n == 0) return t;
  auto complete = [](std::array<int, 3> head, int used) {
    std::array<bool, 3> taken{false, false, false};
    for (int k = 0; k < used; ++k) taken[head[k]] = true;
    int w = used;
    for (int k = 0; k < 3; ++k)
      if (!taken[k]) head[w++] = k;
    return head;
  };
  t.perm_p = complete(ip, n);
  t.perm_q = complete(iq, n);
  return t;
}

struct Panel {
  std::array<Vec3, 3> v;  // in permuted order
  std::array<int, 3> perm;
  double jac = 0;  // 2 * area

  Vec3 point(double x1, double x2) const { return v[0] + x1 * (v[1] - v[0]) + x2 * (v[2] - v[1]); }
  // Barycentrics with respect to the triangle's stored vertex order.
  std::array<double, 3> bary(double x1, double x2) const {
    std::array<double, 3> r = quadrature::reference_barycentric(x1, x2), out{};
    for (int k = 0; k < 3; ++k) out[perm[k]] = r[k];
    return out;
  }
};

inline Panel make_panel(const TriMesh& s, Index t, const std::array<int, 3>& perm) {
  Panel P;
  P.perm = perm;
  for (int k = 0; k < 3; ++k) P.v[k] = s.vertices[s.triangles[t][perm[k]]];
  P.jac = 2.0 * s.areas[t];
  return P;
}

inline double diameter(const TriMesh& s, Index t) {
  const auto& tr = s.triangles[t];
  const auto& v = s.vertices;
  return std::max({(v[tr[0]] - v[tr[1]]).norm(), (v[tr[1]] - v[tr[2]]).norm(), (v[tr[2]] - v[tr[0]]).norm()});
}

}  // namespace bem_detail

/// Integrates kernel(x, y, bary_x, bary_y) -> std::array<double, N> over
/// panel p (x) times panel q (y). Touching panels use the Sauter-Schwab
/// regularising transformations on [0,1]^4; disjoint panels a tensor Gauss
/// rule.
template <int N, class Kernel>
std::array<double, N> integrate_panel_pair(const TriMesh& s, Index p, Index q, const QuadratureOrders& ord,
                                           Kernel&& kernel) {
  using namespace bem_detail;
  const PairTopology top = classify(s, p, q);
  const Panel P = make_panel(s, p, top.perm_p);
  const Panel Q = make_panel(s, q, top.perm_q);
  std::array<double, N> acc{};
  auto add = [&](double w, double x1, double x2, double y1, double y2) {
    const auto val = kernel(P.point(x1, x2), Q.point(y1, y2), P.bary(x1, x2), Q.bary(y1, y2));
    for (int k = 0; k < N; ++k) acc[k] += w * val[k];
  };

  if (top.shared == 0) {
    const double dist = (s.centroid(p) - s.centroid(q)).norm();
    const double diam = std::max(diameter(s, p), diameter(s, q));
    const int n = dist < ord.near_factor * diam ? ord.near : ord.regular;
    const auto rule = quadrature::collapsed_triangle(n);
    for (std::size_t i = 0; i < rule.points.size(); ++i)
      for (std::size_t j = 0; j < rule.points.size(); ++j)
        add(rule.weights[i] * rule.weights[j], rule.points[i][0], rule.points[i][1], rule.points[j][0],
            rule.points[j][1]);
  } else {
    const auto& g = quadrature::cached_gauss(ord.singular);
    const int n = static_cast<int>(g.points.size());
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            const double xi = g.points[a], e1 = g.points[b], e2 = g.points[c], e3 = g.points[d];
            const double w = g.weights[a] * g.weights[b] * g.weights[c] * g.weights[d];
            const double xi3 = xi * xi * xi;
            if (top.shared == 3) {
              const double wt = w * xi3 * e1 * e1 * e2;
              add(wt, xi, xi * (1 - e1 + e1 * e2), xi * (1 - e1 * e2 * e3), xi * (1 - e1));
              add(wt, xi * (1 - e1 * e2 * e3), xi * (1 - e1), xi, xi * (1 - e1 + e1 * e2));
              add(wt, xi, xi * e1 * (1 - e2 + e2 * e3), xi * (1 - e1 * e2), xi * e1 * (1 - e2));
              add(wt, xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * (1 - e2 + e2 * e3));
              add(wt, xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * (1 - e2));
              add(wt, xi, xi * e1 * (1 - e2), xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3));
            } else if (top.shared == 2) {
              const double w1 = w * xi3 * e1 * e1;
              const double w2 = w1 * e2;
              add(w1, xi, xi * e1 * e3, xi * (1 - e1 * e2), xi * e1 * (1 - e2));
              add(w2, xi, xi * e1, xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3));
              add(w2, xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * e2 * e3);
              add(w2, xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), xi, xi * e1);
              add(w2, xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * e2);
            } else {
              const double wt = w * xi3 * e2;
              add(wt, xi, xi * e1, xi * e2, xi * e2 * e3);
              add(wt, xi * e2, xi * e2 * e3, xi, xi * e1);
            }
          }
  }
  const double jac = P.jac * Q.jac;
  for (auto& v : acc) v *= jac;
  return acc;
}

namespace bem_detail {
inline void check_panels(const TriMesh& s, const char* who) {
  if (s.areas.size() != s.triangles.size())
    throw InvalidInput(std::string(who) + ": surface geometry not initialised");
  for (std::size_t t = 0; t < s.areas.size(); ++t)
    if (!(s.areas[t] > 1e-300))
      throw InvalidInput(std::string(who) + ": degenerate (zero-area) panel " + std::to_string(t));
}
}  // namespace bem_detail

inline DenseMatrix assemble_single_layer(const TriMesh& s, const QuadratureOrders& ord = {}) {
  bem_detail::check_panels(s, "assemble_single_layer");
  const Index n = s.num_triangles();
  DenseMatrix V(n, n);
  const double c = 1.0 / (4.0 * pi);
  parallel_for(n, [&](Index p) {
    for (Index q = p; q < n; ++q) {
      auto r = integrate_panel_pair<1>(s, p, q, ord, [c](const Vec3& x, const Vec3& y, const auto&, const auto&) {
        return std::array<double, 1>{c / (x - y).norm()};
      });
      V(p, q) = r[0];
      V(q, p) = r[0];
    }
  });
  return V;
}

/// Boundary mass <phi_j, chi_p> between P1 (vertices) and P0 (panels).
inline DenseMatrix assemble_boundary_mass(const TriMesh& s) {
  DenseMatrix M = DenseMatrix::Zero(s.num_triangles(), s.num_vertices());
  for (Index p = 0; p < s.num_triangles(); ++p)
    for (Index v : s.triangles[p]) M(p, v) += s.areas[p] / 3.0;
  return M;
}

struct DoubleLayer {
  DenseMatrix K;
  DenseMatrix M;
};

/// Principal-value double layer K (P0 test, P1 trial) and boundary mass.
/// Identical panels contribute nothing since (x - y) . n_y = 0 on a flat
/// panel.
inline DoubleLayer assemble_double_layer(const TriMesh& s, const QuadratureOrders& ord = {}) {
  bem_detail::check_panels(s, "assemble_double_layer");
  const Index n = s.num_triangles();
  DoubleLayer out;
  out.K = DenseMatrix::Zero(n, s.num_vertices());
  out.M = assemble_boundary_mass(s);
  const double c = 1.0 / (4.0 * pi);
  parallel_for(n, [&](Index p) {
    for (Index q = 0; q < n; ++q) {
      if (q == p) continue;
      const Vec3 nq = s.normals[q];
      auto r = integrate_panel_pair<3>(s, p, q, ord,
                                       [&](const Vec3& x, const Vec3& y, const auto&, const std::array<double, 3>& by) {
                                         const Vec3 d = x - y;
                                         const double r2 = d.squaredNorm();
                                         const double k = c * d.dot(nq) / (r2 * std::sqrt(r2));
                                         return std::array<double, 3>{k * by[0], k * by[1], k * by[2]};
                                       });
      for (int j = 0; j < 3; ++j) out.K(p, s.triangles[q][j]) += r[j];
    }
  });
  return out;
}

/// Per-component surface curls n x grad_Gamma phi_j, piecewise constant:
/// returns three P0 x P1 matrices.
inline std::array<DenseMatrix, 3> surface_curls(const TriMesh& s) {
  std::array<DenseMatrix, 3> C;
  for (auto& c : C) c = DenseMatrix::Zero(s.num_triangles(), s.num_vertices());
  for (Index p = 0; p < s.num_triangles(); ++p) {
    const auto& t = s.triangles[p];
    const double inv = 1.0 / (2.0 * s.areas[p]);
    for (int a = 0; a < 3; ++a) {
      // curl_Gamma lambda_a = (x_b - x_c) / (2 |T|) for outward (a, b, c).
      const Vec3 curl = (s.vertices[t[(a + 1) % 3]] - s.vertices[t[(a + 2) % 3]]) * inv;
      for (int d = 0; d < 3; ++d) C[d](p, t[a]) += curl[d];
    }
  }
  return C;
}

/// Hypersingular operator through the surface-curl representation
/// <W u, v> = <V curl_Gamma u, curl_Gamma v>, reusing a single-layer matrix.
inline DenseMatrix assemble_hypersingular(const TriMesh& s, const DenseMatrix& V) {
  const auto C = surface_curls(s);
  DenseMatrix W = DenseMatrix::Zero(s.num_vertices(), s.num_vertices());
  for (const auto& c : C) W.noalias() += c.transpose() * (V * c);
  return W;
}

inline DenseMatrix assemble_hypersingular(const TriMesh& s, const QuadratureOrders& ord = {}) {
  return assemble_hypersingular(s, assemble_single_layer(s, ord));
}

/// DtN matrix from assembled V, K, M, W.
///   Costabel:         B = (M/2 - K)^T V^{-1} (M/2 - K) + W
///   Johnson-Nedelec:  B = M^T V^{-1} (M/2 - K)
inline DenseMatrix dtn_matrix(const DenseSpdFactor& Vf, const DenseMatrix& K, const DenseMatrix& M,
                              const DenseMatrix& W, DtnKind kind) {
  const DenseMatrix R = 0.5 * M - K;
  const DenseMatrix X = Vf.solve(R);
  if (kind == DtnKind::Costabel) return R.transpose() * X + W;
  return M.transpose() * X;
}

inline BemOperators assemble_dtn(const TriMesh& s, DtnKind kind = DtnKind::Costabel,
                                 const QuadratureOrders& ord = {}) {
  BemOperators ops;
  ops.kind = kind;
  ops.V = assemble_single_layer(s, ord);
  auto dl = assemble_double_layer(s, ord);
  ops.K = std::move(dl.K);
  ops.M = std::move(dl.M);
  ops.W = assemble_hypersingular(s, ops.V);
  DenseSpdFactor Vf(ops.V);
  ops.v_condition = Vf.condition_estimate();
  ops.warning = Vf.warning();
  ops.B = dtn_matrix(Vf, ops.K, ops.M, ops.W, kind);
  return ops;
}

/// Discrete H^{1/2} surrogate ||z||^2 = z^T W z + <z, 1>^2 / |Gamma|.
inline double h_half_norm_sq(const BemOperators& ops, const Vector& z) {
  const double mean = ops.M.colwise().sum().dot(z);
  const double area = ops.M.sum();
  return z.dot(ops.W * z) + mean * mean / area;
}

}  // namespace ellg
