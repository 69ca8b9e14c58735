#include "ellg/assembly.hpp"
#include "ellg/bem.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ellg;

namespace {

// Brute-force element integration: barycentric coordinates from the affine
// 4x4 system and a conical-product Gauss rule on each tet.
struct Point {
  Vec3 x;
  double w;
};

std::vector<Point> tet_rule(const std::array<Vec3, 4>& p, int n) {
  const auto g = quadrature::gauss_legendre(n);
  const double detJ = std::abs((p[1] - p[0]).cross(p[2] - p[0]).dot(p[3] - p[0]));
  std::vector<Point> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double u = g.points[i], v = g.points[j], w = g.points[k];
        // Collapse the unit cube onto the reference simplex.
        const double a = u, b = (1 - u) * v, c = (1 - u) * (1 - v) * w;
        const double jac = (1 - u) * (1 - u) * (1 - v);
        out.push_back({p[0] + a * (p[1] - p[0]) + b * (p[2] - p[0]) + c * (p[3] - p[0]),
                       g.weights[i] * g.weights[j] * g.weights[k] * jac * detJ});
      }
  return out;
}

struct Affine {
  Eigen::Matrix4d coef;  // row i: lambda_i(x) = c0 + c . x
  double lambda(int i, const Vec3& x) const { return coef(i, 0) + coef.row(i).tail<3>().dot(x); }
  Vec3 grad(int i) const { return coef.row(i).tail<3>().transpose(); }
};

Affine affine(const std::array<Vec3, 4>& p) {
  Eigen::Matrix4d A;
  for (int i = 0; i < 4; ++i) A.row(i) << 1, p[i].transpose();
  return {A.inverse().transpose()};
}

struct Brute {
  DenseMatrix mass, stiff, mnd, cnd, cpl;
};

Brute brute_force(const TetMesh& m, int order) {
  const Index nv = m.num_vertices(), ne = m.num_edges();
  Brute b{DenseMatrix::Zero(nv, nv), DenseMatrix::Zero(nv, nv), DenseMatrix::Zero(ne, ne),
          DenseMatrix::Zero(ne, ne), DenseMatrix::Zero(ne, 3 * nv)};
  for (Index t = 0; t < m.num_tets(); ++t) {
    const auto& tv = m.tets[t];
    std::array<Vec3, 4> p{m.vertices[tv[0]], m.vertices[tv[1]], m.vertices[tv[2]], m.vertices[tv[3]]};
    const Affine L = affine(p);
    // Local edges with their global ids and orientation.
    std::vector<std::array<int, 3>> le;  // tail, head, global edge
    for (int a = 0; a < 4; ++a)
      for (int c = a + 1; c < 4; ++c) {
        int tail = tv[a] < tv[c] ? a : c, head = tv[a] < tv[c] ? c : a;
        const Index ge = m.edge_index(tv[a], tv[c]);
        le.push_back({tail, head, ge});
      }
    for (const auto& q : tet_rule(p, order)) {
      auto w = [&](const std::array<int, 3>& e) {
        return Vec3(L.lambda(e[0], q.x) * L.grad(e[1]) - L.lambda(e[1], q.x) * L.grad(e[0]));
      };
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          b.mass(tv[i], tv[j]) += q.w * L.lambda(i, q.x) * L.lambda(j, q.x);
          b.stiff(tv[i], tv[j]) += q.w * L.grad(i).dot(L.grad(j));
        }
      for (const auto& e : le) {
        for (const auto& f : le) {
          b.mnd(e[2], f[2]) += q.w * w(e).dot(w(f));
          Vec3 ce = 2 * L.grad(e[0]).cross(L.grad(e[1])), cf = 2 * L.grad(f[0]).cross(L.grad(f[1]));
          b.cnd(e[2], f[2]) += q.w * ce.dot(cf);
        }
        for (int j = 0; j < 4; ++j)
          for (int c = 0; c < 3; ++c) b.cpl(e[2], 3 * tv[j] + c) += q.w * L.lambda(j, q.x) * w(e)[c];
      }
    }
  }
  return b;
}

double rel_diff(const SparseMatrix& a, const DenseMatrix& b) {
  return max_abs(DenseMatrix(a) - b) / std::max(1.0, max_abs(b));
}

}  // namespace

TEST(Fem, MatchesBruteForceQuadrature) {
  for (int n : {1, 2}) {
    TetMesh m = build_cube_mesh(n);
    FemMatrices fem = assemble_fem(m, 1, 1);
    Brute b = brute_force(m, 5);  // exact for degree <= 9
    EXPECT_LT(rel_diff(fem.mass_p1, b.mass), 1e-12) << n;
    EXPECT_LT(rel_diff(fem.stiffness_p1, b.stiff), 1e-12) << n;
    EXPECT_LT(rel_diff(fem.mass_nd, b.mnd), 1e-12) << n;
    EXPECT_LT(rel_diff(fem.curl_nd, b.cnd), 1e-12) << n;
    EXPECT_LT(rel_diff(fem.coupling, b.cpl), 1e-12) << n;
  }
}

TEST(Fem, MassOfConstantIsVolume) {
  for (int n = 1; n <= 4; ++n) {
    FemMatrices fem = assemble_fem(build_cube_mesh(n), 1, 1);
    Vector one = Vector::Ones(fem.mass_p1.rows());
    EXPECT_NEAR(one.dot(fem.mass_p1 * one), 1.0, 1e-12);
    EXPECT_LT((fem.stiffness_p1 * one).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Fem, ConstantEdgeFieldHasNoCurlEnergy) {
  TetMesh m = build_cube_mesh(1);
  FemMatrices fem = assemble_fem(m, 1, 1);
  Vector h = interpolate_edge([](const Vec3&) { return Vec3(0, 0, 2); }, m).coefficients;
  EXPECT_LE(std::abs(h.dot(fem.curl_nd * h)), 1e-12);
  EXPECT_NEAR(h.dot(fem.mass_nd * h), 4.0, 1e-12);
}

TEST(Fem, GradientKernel) {
  for (int n = 1; n <= 4; ++n) {
    TetMesh m = build_cube_mesh(n);
    FemMatrices fem = assemble_fem(m, 1, 1);
    std::mt19937 rng(n);
    std::uniform_real_distribution<double> U(-1, 1);
    Vector p(m.num_vertices());
    for (Index i = 0; i < p.size(); ++i) p[i] = U(rng);
    Vector g = gradient_matrix(m) * p;
    EXPECT_LE(std::abs(g.dot(fem.curl_nd * g)), 1e-12) << n;
    EXPECT_LE((fem.curl_nd * g).cwiseAbs().maxCoeff(), 1e-12) << n;
  }
}

TEST(Fem, SymmetryAndDefiniteness) {
  TetMesh m = build_cube_mesh(2);
  FemMatrices fem = assemble_fem(m, 2, 3);
  for (const SparseMatrix* A : {&fem.mass_p1, &fem.stiffness_p1, &fem.mass_nd, &fem.curl_nd}) {
    DenseMatrix D(*A);
    EXPECT_LT(max_abs(D - D.transpose()), 1e-14 * max_abs(D));
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(D);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12 * es.eigenvalues().maxCoeff());
  }
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<DenseMatrix>(DenseMatrix(fem.mass_nd)).eigenvalues().minCoeff(), 0);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<DenseMatrix>(DenseMatrix(fem.mass_p1)).eigenvalues().minCoeff(), 0);
  EXPECT_DOUBLE_EQ(fem.curl_coefficient(), 1.0 / 6.0);
}

TEST(Fem, RejectsNonPositiveConstants) {
  TetMesh m = build_cube_mesh(1);
  EXPECT_THROW(assemble_fem(m, 0, 1), InvalidInput);
  EXPECT_THROW(assemble_fem(m, 1, -1), InvalidInput);
}

TEST(Skew, ZeroField) {
  TetMesh m = build_cube_mesh(2);
  SparseMatrix S = assemble_skew(m, P1VecField(m.num_vertices()));
  EXPECT_EQ(S.nonZeros(), 0);
}

TEST(Skew, ExactlySkew) {
  TetMesh m = build_cube_mesh(3);
  std::mt19937 rng(4);
  std::normal_distribution<double> N(0, 1);
  P1VecField f(m.num_vertices());
  for (auto& v : f.values) v = Vec3(N(rng), N(rng), N(rng));
  SparseMatrix S = assemble_skew(m, f);
  SparseMatrix St = S.transpose();
  EXPECT_LT(max_abs(DenseMatrix(S + St)), 1e-15);
  for (int s = 0; s < 10; ++s) {
    Vector x(S.cols());
    for (Index i = 0; i < x.size(); ++i) x[i] = N(rng);
    EXPECT_LE(std::abs(x.dot(S * x)), 1e-12 * x.squaredNorm());
  }
}

TEST(Skew, ConstantFieldsClosedForm) {
  // Rows are test functions, columns trial functions: v^T S(m) u = <m x u, v>.
  TetMesh m = build_cube_mesh(2);
  P1VecField mz(m.num_vertices(), Vec3(0, 0, 1));
  SparseMatrix S = assemble_skew(m, mz);
  const Vec3 u(0.3, -1.0, 2.0), v(1.5, 0.25, -0.7);
  Vector U = P1VecField(m.num_vertices(), u).flat(), W = P1VecField(m.num_vertices(), v).flat();
  EXPECT_NEAR(W.dot(S * U), Vec3(0, 0, 1).cross(u).dot(v), 1e-12);
}

TEST(Skew, MatchesBruteForce) {
  TetMesh m = build_cube_mesh(1);
  std::mt19937 rng(9);
  std::normal_distribution<double> N(0, 1);
  P1VecField f(m.num_vertices());
  for (auto& v : f.values) v = Vec3(N(rng), N(rng), N(rng));
  DenseMatrix ref = DenseMatrix::Zero(3 * m.num_vertices(), 3 * m.num_vertices());
  for (Index t = 0; t < m.num_tets(); ++t) {
    const auto& tv = m.tets[t];
    std::array<Vec3, 4> p{m.vertices[tv[0]], m.vertices[tv[1]], m.vertices[tv[2]], m.vertices[tv[3]]};
    const Affine L = affine(p);
    for (const auto& q : tet_rule(p, 4)) {
      Vec3 mh = Vec3::Zero();
      for (int a = 0; a < 4; ++a) mh += L.lambda(a, q.x) * f[tv[a]];
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int c = 0; c < 3; ++c) {
            Vec3 r = mh.cross(Vec3::Unit(c)) * L.lambda(i, q.x) * L.lambda(j, q.x);
            for (int d = 0; d < 3; ++d) ref(3 * tv[i] + d, 3 * tv[j] + c) += q.w * r[d];
          }
    }
  }
  EXPECT_LT(max_abs(DenseMatrix(assemble_skew(m, f)) - ref), 1e-12 * max_abs(ref));
}

TEST(XhSystem, SingleCubeShapeAndSymmetry) {
  TetMesh m = build_cube_mesh(1);
  TriMesh s = extract_boundary(m);
  XhDofMap d = build_xh_dofmap(m);
  FemMatrices fem = assemble_fem(m, 1, 1.25667e-6);
  BemOperators bem = assemble_dtn(s);
  XhSystem sys = assemble_xh_system(d, fem, bem.B, 0.01);
  EXPECT_EQ(sys.system.rows(), 9);
  EXPECT_EQ(sys.system.cols(), 9);
  DenseMatrix L(sys.system);
  EXPECT_LE(max_abs(L - L.transpose()), 1e-10 * max_abs(L));
  EXPECT_EQ(sys.coupling.rows(), 9);
  EXPECT_EQ(sys.coupling.cols(), 24);
}

TEST(XhSystem, ZeroStepIsGramAndPositive) {
  TetMesh m = build_cube_mesh(2);
  TriMesh s = extract_boundary(m);
  XhDofMap d = build_xh_dofmap(m);
  FemMatrices fem = assemble_fem(m, 1, 1);
  BemOperators bem = assemble_dtn(s);
  XhSystem sys = assemble_xh_system(d, fem, bem.B, 0.0);
  EXPECT_EQ(max_abs(DenseMatrix(sys.system - sys.gram)), 0.0);
  std::mt19937 rng(2);
  std::normal_distribution<double> N(0, 1);
  for (int k = 0; k < 100; ++k) {
    Vector x(d.size());
    for (Index i = 0; i < x.size(); ++i) x[i] = N(rng);
    EXPECT_GT(x.dot(sys.system * x), 0);
  }
}

TEST(XhSystem, EllipticityConstantUniform) {
  // x^T Gram x >= c (||psi||^2 + ||eta||^2_{1/2,h}); the observed c must not
  // degrade under refinement.
  std::vector<double> cs;
  for (int n = 1; n <= 3; ++n) {
    TetMesh m = build_cube_mesh(n);
    TriMesh s = extract_boundary(m);
    XhDofMap d = build_xh_dofmap(m);
    FemMatrices fem = assemble_fem(m, 1, 1);
    BemOperators bem = assemble_dtn(s);
    XhSystem sys = assemble_xh_system(d, fem, bem.B, 0.0);
    std::mt19937 rng(n);
    std::normal_distribution<double> N(0, 1);
    double c = 1e300;
    for (int k = 0; k < 50; ++k) {
      Vector x(d.size());
      for (Index i = 0; i < x.size(); ++i) x[i] = N(rng);
      Vector h = d.edge_coefficients(x);
      double rhs = h.dot(fem.mass_nd * h) + h_half_norm_sq(bem, d.boundary_values(x));
      c = std::min(c, x.dot(sys.gram * x) / rhs);
    }
    cs.push_back(c);
  }
  for (double c : cs) EXPECT_GT(c, 0.05);
  EXPECT_GT(cs.back(), 0.25 * cs.front());
}

TEST(XhSystem, CurlFormScaling) {
  // b(psi, psi) = (sigma mu0)^{-1} ||curl psi||^2 exactly.
  TetMesh m = build_cube_mesh(2);
  TriMesh s = extract_boundary(m);
  XhDofMap d = build_xh_dofmap(m);
  FemMatrices fem = assemble_fem(m, 2.0, 0.25);
  BemOperators bem = assemble_dtn(s);
  XhSystem sys = assemble_xh_system(d, fem, bem.B, 0.1);
  std::mt19937 rng(1);
  std::normal_distribution<double> N(0, 1);
  Vector x(d.size());
  for (Index i = 0; i < x.size(); ++i) x[i] = N(rng);
  Vector h = d.edge_coefficients(x);
  EXPECT_NEAR(x.dot(sys.curl * x), 2.0 * h.dot(fem.curl_nd * h), 1e-12 * x.dot(sys.curl * x));
}

TEST(XhSystem, DimensionMismatch) {
  TetMesh m = build_cube_mesh(1);
  XhDofMap d = build_xh_dofmap(m);
  FemMatrices fem = assemble_fem(m, 1, 1);
  EXPECT_THROW(assemble_xh_system(d, fem, DenseMatrix::Identity(5, 5), 0.1), InvalidInput);
}
