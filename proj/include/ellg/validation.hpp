#pragma once

// Self-checks behind `ellg validate`: mesh/space structure, sphere oracles
// for the boundary operators, DtN ellipticity samples and the uniform-field
// LLG case.

#include "ellg/stepper.hpp"

#include <random>
#include <sstream>

namespace ellg {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace validation_detail {
inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}
}  // namespace validation_detail

struct StructureReport {
  long long euler = 0;            // V - E + F - T
  bool closed = false;            // boundary surface closed and consistently oriented
  bool positive_volumes = false;
  bool outward = false;
  double volume = 0;
  double boundary_area = 0;
  double constraint_error = 0;    // coupled-space trace constraint on affine data
  double curl_grad = 0;           // max |curl grad phi_h| over tets, random phi
};

/// Structural checks of the cube mesh with n subdivisions and of the
/// coupled space on it.
inline StructureReport check_structure(int n, unsigned seed = 1) {
  StructureReport r;
  TetMesh mesh = build_cube_mesh(n);
  TriMesh surf = extract_boundary(mesh);
  r.euler = static_cast<long long>(mesh.num_vertices()) - mesh.num_edges() + static_cast<long long>(mesh.face_count) -
            mesh.num_tets();
  r.closed = surf.is_closed();
  r.positive_volumes = true;
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const double v = mesh.signed_volume(t);
    r.positive_volumes = r.positive_volumes && v > 0;
    r.volume += v;
  }
  r.boundary_area = surf.total_area();
  const Vec3 c = mesh.centroid();
  r.outward = true;
  for (Index f = 0; f < surf.num_triangles(); ++f) r.outward = r.outward && surf.normals[f].dot(surf.centroid(f) - c) > 0;

  // An affine potential phi: its gradient interpolated on all edges must be
  // reproduced from the interior circulations and the boundary trace of phi.
  const XhDofMap dofs = build_xh_dofmap(mesh);
  const Vec3 a(0.3, -1.7, 2.9);
  const double b = 0.45;
  auto phi = [&](const Vec3& x) { return a.dot(x) + b; };
  const Vector full = interpolate_edge([&](const Vec3&) { return a; }, mesh).coefficients;
  Vector trace(dofs.num_boundary_vertices);
  for (Index i = 0; i < dofs.num_boundary_vertices; ++i) trace[i] = phi(mesh.vertices[mesh.boundary_vertices[i]]);
  const Vector x = dofs.pack(full, trace);
  r.constraint_error = max_abs(dofs.edge_coefficients(x) - full);

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  Vector p(mesh.num_vertices());
  for (Index i = 0; i < p.size(); ++i) p[i] = U(rng);
  const Vector g = gradient_matrix(mesh) * p;
  for (Index t = 0; t < mesh.num_tets(); ++t) r.curl_grad = std::max(r.curl_grad, edge_field_curl(mesh, g, t).norm());
  return r;
}

inline bool passed(const StructureReport& r) {
  return r.euler == 1 && r.closed && r.positive_volumes && r.outward && std::abs(r.volume - 1) < 1e-12 &&
         std::abs(r.boundary_area - 6) < 1e-12 && r.constraint_error <= 1e-12 && r.curl_grad <= 1e-12;
}

struct SphereOracle {
  int refinements = 0;
  Index panels = 0;
  double single_layer = 0;  // <V 1, 1>, exact 4 pi r^3
  double dtn = 0;           // <DtN_h 1, 1>, exact -4 pi r
  double seconds = 0;
};

/// Unit-radius values unless another radius is given.
inline SphereOracle sphere_oracle(int refinements, DtnKind kind = DtnKind::Costabel, double radius = 1,
                                  const QuadratureOrders& ord = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SphereOracle o;
  o.refinements = refinements;
  const TriMesh s = build_icosphere(refinements, radius);
  o.panels = s.num_triangles();
  const BemOperators ops = assemble_dtn(s, kind, ord);
  o.single_layer = ops.V.sum();
  o.dtn = -ops.B.sum();
  o.seconds = detail::seconds_since(t0);
  return o;
}

struct EllipticityReport {
  Index samples = 0;
  double min_rayleigh = 0;  // min over samples of -<DtN z, z> / |z|^2
  double asymmetry = 0;     // max|B - B^T| / max|B|
};

inline EllipticityReport dtn_ellipticity(const TriMesh& s, int samples = 100, unsigned seed = 7,
                                         DtnKind kind = DtnKind::Costabel) {
  const BemOperators ops = assemble_dtn(s, kind);
  EllipticityReport r;
  r.samples = samples;
  r.asymmetry = max_abs(ops.B - ops.B.transpose()) / max_abs(ops.B);
  std::mt19937 rng(seed);
  std::normal_distribution<double> N(0, 1);
  r.min_rayleigh = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    Vector z(s.num_vertices());
    for (Index i = 0; i < z.size(); ++i) z[i] = N(rng);
    // <DtN z, z> = -z^T B z
    r.min_rayleigh = std::min(r.min_rayleigh, z.dot(ops.B * z) / z.squaredNorm());
  }
  return r;
}

/// Tangent velocity for m = (0,0,1) and H = (1,0,0) on the cube mesh, and
/// its max deviation from the closed form (alpha, -1, 0) / (1 + alpha^2).
/// The solve runs at a relative residual of 1e-13 so that the check
/// measures the discretization, not the stopping criterion.
inline double llg_uniform_field_error(double alpha, int n = 2, double tolerance = 1e-13) {
  SimConfig c;
  c.alpha = alpha;
  c.tolerance = tolerance;
  c.n = n;
  c.steps = 100;
  c.T = 0.01;
  Discretization d;
  d.mesh = build_cube_mesh(n);
  d.surface = extract_boundary(d.mesh);
  d.fem = assemble_fem(d.mesh, c.sigma, c.mu0);
  d.mass3 = vector_p1(d.fem.mass_p1);
  d.stiffness3 = vector_p1(d.fem.stiffness_p1);
  const P1VecField m = interpolate_nodal([](const Vec3&) { return Vec3(0, 0, 1); }, d.mesh);
  const Vector h = interpolate_edge([](const Vec3&) { return Vec3(1, 0, 0); }, d.mesh).coefficients;
  const LlgResult res = llg_step(d, m, h, c);
  const Vec3 expected = Vec3(alpha, -1, 0) / (1 + alpha * alpha);
  double err = 0;
  for (const auto& v : res.v.values) err = std::max(err, (v - expected).cwiseAbs().maxCoeff());
  return err;
}

/// The full invariant suite run by `ellg validate`.
inline std::vector<Check> validation_suite() {
  using validation_detail::num;
  std::vector<Check> out;
  for (int n = 1; n <= 4; ++n) {
    const StructureReport r = check_structure(n);
    out.push_back({"mesh/space structure n=" + std::to_string(n), passed(r),
                   "V-E+F-T=" + std::to_string(r.euler) + " closed=" + (r.closed ? "yes" : "no") +
                       " constraint=" + num(r.constraint_error) + " curl(grad)=" + num(r.curl_grad)});
  }
  {
    const SphereOracle o = sphere_oracle(2);
    const double rv = o.single_layer / (4 * pi), rd = o.dtn / (-4 * pi);
    out.push_back({"sphere single layer (320 panels)", std::abs(rv - 1) <= 0.03,
                   "<V1,1>/(4pi) = " + num(rv)});
    out.push_back({"sphere DtN (320 panels)", std::abs(rd - 1) <= 0.05, "<DtN1,1>/(-4pi) = " + num(rd)});
  }
  for (int n = 1; n <= 3; ++n) {
    TetMesh mesh = build_cube_mesh(n);
    const EllipticityReport e = dtn_ellipticity(extract_boundary(mesh));
    out.push_back({"DtN ellipticity cube n=" + std::to_string(n), e.min_rayleigh > 0 && e.asymmetry <= 1e-10,
                   "min -<DtN z,z>/|z|^2 = " + num(e.min_rayleigh) + " asymmetry = " + num(e.asymmetry)});
  }
  for (int r = 0; r <= 2; ++r) {
    const EllipticityReport e = dtn_ellipticity(build_icosphere(r, 1));
    out.push_back({"DtN ellipticity icosphere r=" + std::to_string(r), e.min_rayleigh > 0 && e.asymmetry <= 1e-10,
                   "min -<DtN z,z>/|z|^2 = " + num(e.min_rayleigh) + " asymmetry = " + num(e.asymmetry)});
  }
  {
    const double err = llg_uniform_field_error(0.5);
    out.push_back({"LLG uniform field (alpha=0.5)", err <= 1e-10, "max error = " + num(err)});
  }
  return out;
}

}  // namespace ellg
