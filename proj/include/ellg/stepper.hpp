#pragma once

// Coupled time integrator: tangent-plane LLG step, nodewise magnetization
// update, and the FEM-BEM eddy-current step for (H, lambda).

#include "ellg/assembly.hpp"
#include "ellg/bem.hpp"
#include "ellg/fespace.hpp"
#include "ellg/solver.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>

namespace ellg {

struct SimConfig {
  double alpha = 0.5;
  double exchange = 1.0;  // C_e
  double mu0 = 1.0;
  double sigma = 1.0;
  double theta = 1.0;
  double T = 1.0;
  int steps = 100;  // N; the time step is k = T / N
  int n = 5;        // cube subdivisions per axis
  DtnKind coupling = DtnKind::Costabel;
  double tolerance = 1e-10;
  int restart = 50;
  int snapshot_every = 0;  // 0: max(1, N / 10)
  int quad_order = 4;
  std::string output_dir = "output";

  double k() const { return T / steps; }
  int snapshot_cadence() const { return snapshot_every > 0 ? snapshot_every : std::max(1, steps / 10); }
  SolverOptions solver() const {
    SolverOptions o;
    o.tolerance = tolerance;
    o.restart = restart;
    return o;
  }
};

/// Throws InvalidInput on any violated parameter constraint.
inline void validate(const SimConfig& c) {
  auto fail = [](const std::string& msg) { throw InvalidInput("invalid configuration: " + msg); };
  if (!(c.alpha > 0)) fail("alpha must be > 0");
  if (!(c.exchange > 0)) fail("Ce must be > 0");
  if (!(c.mu0 > 0)) fail("mu0 must be > 0");
  if (!(c.sigma > 0)) fail("sigma must be > 0");
  if (!(c.theta >= 0 && c.theta <= 1)) fail("theta must lie in [0, 1]");
  if (!(c.T > 0)) fail("T must be > 0");
  if (c.steps < 1) fail("steps must be >= 1");
  if (c.n < 1) fail("n must be >= 1");
  if (!(c.tolerance > 0)) fail("tol must be > 0");
  if (c.restart < 1) fail("restart must be >= 1");
  if (c.snapshot_every < 0) fail("snapshot_every must be >= 0");
  if (c.quad_order < 1) fail("quad_order must be >= 1");
  if (!(c.k() < 2 * c.alpha)) {
    std::ostringstream os;
    os.precision(17);
    os << "time step k = " << c.k() << " violates the energy-stability requirement k < 2*alpha = "
       << 2 * c.alpha;
    fail(os.str());
  }
}

/// Stability warning for theta <= 1/2 (empty otherwise): the explicit part of
/// the exchange term needs k = o(h^2) for theta < 1/2 and k = o(h) for
/// theta = 1/2.
inline std::string theta_warning(const SimConfig& c, double h) {
  std::ostringstream os;
  if (c.theta < 0.5) {
    os << "theta = " << c.theta << " < 1/2 requires k = o(h^2); k/h^2 = " << c.k() / (h * h);
  } else if (c.theta == 0.5) {
    os << "theta = 1/2 requires k = o(h); k/h = " << c.k() / h;
  }
  return os.str();
}

/// Initial magnetization of the cube benchmark, in centred coordinates:
/// a vortex core of radius 1/2 around the x3 axis through the cube centre,
/// (0,0,-1) outside.
inline Vec3 benchmark_m0(const Vec3& x) {
  const double dx = x[0] - 0.5, dy = x[1] - 0.5;
  const double d = dx * dx + dy * dy;
  if (d >= 0.25) return {0, 0, -1};
  const double s = 1 - 2 * std::sqrt(d);
  const double A = s * s * s * s / 4;
  return Vec3(2 * A * dx, 2 * A * dy, A * A - d) / (A * A + d);
}

inline Vec3 benchmark_h0(const Vec3&) { return {0, 0, 2}; }

/// Mesh, spaces and all time-independent operators.
struct Discretization {
  TetMesh mesh;
  TriMesh surface;
  XhDofMap dofs;
  FemMatrices fem;
  SparseMatrix mass3;       // vector P1 mass
  SparseMatrix stiffness3;  // vector P1 stiffness
  BemOperators bem;
  double volume = 0;
};

inline Discretization discretize(TetMesh mesh, const SimConfig& c) {
  Discretization d;
  d.mesh = std::move(mesh);
  d.surface = extract_boundary(d.mesh);
  d.dofs = build_xh_dofmap(d.mesh);
  d.fem = assemble_fem(d.mesh, c.sigma, c.mu0);
  d.mass3 = vector_p1(d.fem.mass_p1);
  d.stiffness3 = vector_p1(d.fem.stiffness_p1);
  QuadratureOrders q;
  q.regular = c.quad_order;
  q.singular = c.quad_order;
  q.near = c.quad_order + 2;
  d.bem = assemble_dtn(d.surface, c.coupling, q);
  d.volume = d.fem.mass_p1.sum();
  return d;
}

inline Discretization discretize(const SimConfig& c) { return discretize(build_cube_mesh(c.n), c); }

struct InitialData {
  P1VecField m;
  Vector edge_coeffs;  // full Nedelec coefficients of H
  Vector lambda;       // boundary nodal values
  Vector x;            // coupled unknowns
};

/// Nodal interpolant of m0, edge interpolant of H0 = (0,0,2) and nodal
/// interpolant of the exterior potential trace 2 x3, which together form a
/// compatible coupled pair.
inline InitialData initial_data(const TetMesh& mesh, const XhDofMap& dofs) {
  InitialData init;
  init.m = interpolate_nodal(benchmark_m0, mesh);
  init.edge_coeffs = interpolate_edge(benchmark_h0, mesh).coefficients;
  init.lambda.resize(dofs.num_boundary_vertices);
  for (Index b = 0; b < dofs.num_boundary_vertices; ++b)
    init.lambda[b] = 2.0 * mesh.vertices[mesh.boundary_vertices[b]][2];
  init.x = dofs.pack(init.edge_coeffs, init.lambda);
  return init;
}

struct LlgResult {
  P1VecField v;
  LinearSolveReport report;
};

/// Tangent-plane step: finds v with v(z) . m(z) = 0 at every vertex such that
///   alpha <v, phi> + <m x v, phi> + Ce theta k <grad v, grad phi>
///     = -Ce <grad m, grad phi> + <H, phi>
/// for all tangent phi. Solved in the 2V tangent coordinates of the nodal
/// frames, so tangency holds by construction.
inline LlgResult llg_step(const Discretization& d, const P1VecField& m, const Vector& h_edges,
                          const SimConfig& c) {
  const TangentFrame frames = tangent_frames(m);
  const SparseMatrix Q = frames.basis();
  const SparseMatrix Qt = Q.transpose();
  SparseMatrix A3 = c.alpha * d.mass3 + assemble_skew(d.mesh, m) + (c.exchange * c.theta * c.k()) * d.stiffness3;
  SparseMatrix A = Qt * A3 * Q;
  Vector rhs3 = -c.exchange * (d.stiffness3 * m.flat()) + d.fem.coupling.transpose() * h_edges;
  Vector rhs = Qt * rhs3;
  auto pre = BlockDiagonalPreconditioner::uniform(A, 2);
  LlgResult out;
  Vector coords = solve_general(A, rhs, c.solver(), pre, &out.report);
  out.v = frames.expand(coords);
  return out;
}

/// m_next(z) = m(z) + k v(z), no renormalisation.
inline P1VecField update_m(const P1VecField& m, const P1VecField& v, double k) {
  if (m.size() != v.size()) throw InvalidInput("update_m: size mismatch");
  P1VecField out(m.size());
  for (Index z = 0; z < m.size(); ++z) out[z] = m[z] + k * v[z];
  return out;
}

struct EddyResult {
  Vector x;
  LinearSolveReport report;
};

/// Solves (gram + k b) x_next = gram x_prev - k <v, xi>.
///
/// The curl-curl coefficient 1/(sigma mu0) is huge for physical mu0 and H is
/// nearly curl-free, so evaluating the residual from x_next loses about
/// log10(k / (sigma mu0 h^2)) digits to cancellation. The solve is therefore
/// done for the increment d = x_next - x_prev with the algebraically equal
/// right-hand side -k (<v, xi> + b(H_prev, xi)); the reported relative
/// residual is ||rhs_d - L d|| / ||gram x_prev - k <v, xi>||, i.e. the
/// residual of the full system.
inline EddyResult eddy_step(const XhSystem& sys, const Vector& x_prev, const P1VecField& v, const SimConfig& c) {
  const Vector load = sys.coupling * v.flat();
  const Vector rhs_full = sys.gram * x_prev - sys.k * load;
  const Vector rhs_inc = -sys.k * (load + sys.curl * x_prev);
  EddyResult out;
  const double full_norm = rhs_full.norm();
  const double inc_norm = rhs_inc.norm();
  if (inc_norm == 0 || full_norm == 0) {
    out.x = x_prev;
    out.report.converged = true;
    return out;
  }
  SolverOptions opt = c.solver();
  opt.tolerance = c.tolerance * full_norm / inc_norm;
  auto pre = BlockDiagonalPreconditioner::uniform(sys.system, 1);
  Vector inc;
  try {
    inc = sys.symmetric ? solve_spd(sys.system, rhs_inc, opt, pre, &out.report)
                        : solve_general(sys.system, rhs_inc, opt, pre, &out.report);
  } catch (const SolverError& e) {
    LinearSolveReport r = e.report();
    r.relative_residual *= inc_norm / full_norm;
    throw SolverError(e.what(), r);
  }
  out.report.relative_residual *= inc_norm / full_norm;
  out.x = x_prev + inc;
  return out;
}

struct EnergyRow {
  double t = 0;
  double exchange = 0;     // ||grad m||_{L2}
  double hcurl = 0;        // ||H||_{H(curl)}
  double lambda_h12 = 0;   // discrete H^{1/2} surrogate of lambda
  double kv2 = 0;          // k sum ||v||^2_{L2}
  double norm_identity_residual = 0;
  int llg_iters = 0;
  int eddy_iters = 0;
  // Not written to the CSV.
  double mean_m3 = 0;
  double tangency = 0;  // max_z |v(z) . m(z)| of the step ending here

  double energy() const { return exchange * exchange + hcurl * hcurl + lambda_h12 * lambda_h12 + kv2; }
};

using EnergyTrace = std::vector<EnergyRow>;

struct SimState {
  int step = 0;
  P1VecField m;
  Vector x;
  P1VecField v;
  std::vector<double> accumulated_v2;  // k^2 sum_i |v^i(z)|^2
  double kv2 = 0;
};

/// Runs the integrator step by step on a prepared discretization.
class Simulation {
 public:
  explicit Simulation(const SimConfig& config) : Simulation(config, build_cube_mesh(config.n)) {}

  Simulation(const SimConfig& config, TetMesh mesh) : config_(config) {
    validate(config_);
    disc_ = discretize(std::move(mesh), config_);
    system_ = assemble_xh_system(disc_.dofs, disc_.fem, disc_.bem.B, config_.k(),
                                 config_.coupling == DtnKind::Costabel);
    std::string w = theta_warning(config_, disc_.mesh.h > 0 ? disc_.mesh.h : mesh_quality(disc_.mesh).max_h);
    if (!w.empty()) warnings_.push_back(w);
    if (!disc_.bem.warning.empty()) warnings_.push_back(disc_.bem.warning);
    InitialData init = initial_data(disc_.mesh, disc_.dofs);
    set_state(init.m, init.x);
  }

  /// Replaces the current state (restarts the step counter and trace).
  void set_state(const P1VecField& m, const Vector& x) {
    if (m.size() != disc_.mesh.num_vertices() || x.size() != disc_.dofs.size())
      throw InvalidInput("Simulation::set_state: size mismatch");
    state_ = SimState{};
    state_.m = m;
    state_.x = x;
    state_.v = P1VecField(m.size());
    state_.accumulated_v2.assign(m.size(), 0.0);
    m0_ = m;
    trace_.clear();
    trace_.push_back(measure(0, 0, 0));
  }

  /// One full step: LLG velocity, nodewise update, eddy-current solve.
  void step() {
    const double k = config_.k();
    LlgResult llg;
    EddyResult eddy;
    try {
      llg = llg_step(disc_, state_.m, edge_coefficients(), config_);
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(state_.step) + ": LLG solve failed: " + e.what(), e.report());
    }
    double tangency = 0;
    for (Index z = 0; z < state_.m.size(); ++z) {
      tangency = std::max(tangency, std::abs(llg.v[z].dot(state_.m[z])));
      state_.accumulated_v2[z] += k * k * llg.v[z].squaredNorm();
    }
    const Vector vf = llg.v.flat();
    state_.kv2 += k * vf.dot(disc_.mass3 * vf);
    state_.m = update_m(state_.m, llg.v, k);
    try {
      eddy = eddy_step(system_, state_.x, llg.v, config_);
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(state_.step) + ": eddy-current solve failed: " + e.what(),
                        e.report());
    }
    state_.x = eddy.x;
    state_.v = llg.v;
    ++state_.step;
    EnergyRow row = measure(llg.report.iterations, eddy.report.iterations, tangency);
    trace_.push_back(row);
  }

  const SimConfig& config() const { return config_; }
  const Discretization& discretization() const { return disc_; }
  const XhSystem& system() const { return system_; }
  const SimState& state() const { return state_; }
  const P1VecField& initial_m() const { return m0_; }
  const EnergyTrace& trace() const { return trace_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  double time() const { return state_.step * config_.k(); }
  bool finished() const { return state_.step >= config_.steps; }

  Vector edge_coefficients() const { return disc_.dofs.edge_coefficients(state_.x); }
  Vector lambda() const { return disc_.dofs.boundary_values(state_.x); }

  /// Interior electric field sigma^{-1} curl H, one vector per tet.
  std::vector<Vec3> electric_field() const {
    const Vector h = edge_coefficients();
    std::vector<Vec3> E(disc_.mesh.tets.size());
    for (Index t = 0; t < disc_.mesh.num_tets(); ++t) E[t] = edge_field_curl(disc_.mesh, h, t) / config_.sigma;
    return E;
  }

  /// H at tet barycentres.
  std::vector<Vec3> field_cells() const {
    const Vector h = edge_coefficients();
    std::vector<Vec3> H(disc_.mesh.tets.size());
    for (Index t = 0; t < disc_.mesh.num_tets(); ++t)
      H[t] = evaluate_edge_field(disc_.mesh, h, t, {0.25, 0.25, 0.25, 0.25});
    return H;
  }

  /// H sampled at vertices as the average of the adjacent tet values at the
  /// vertex (visualisation only; the edge field is discontinuous normally).
  P1VecField field_vertices() const {
    const Vector h = edge_coefficients();
    P1VecField out(disc_.mesh.num_vertices());
    std::vector<int> count(out.values.size(), 0);
    for (Index t = 0; t < disc_.mesh.num_tets(); ++t)
      for (int a = 0; a < 4; ++a) {
        std::array<double, 4> bary{0, 0, 0, 0};
        bary[a] = 1;
        out[disc_.mesh.tets[t][a]] += evaluate_edge_field(disc_.mesh, h, t, bary);
        ++count[disc_.mesh.tets[t][a]];
      }
    for (Index z = 0; z < out.size(); ++z) out[z] /= std::max(1, count[z]);
    return out;
  }

  double mean_m3() const {
    Vector m3(state_.m.size());
    for (Index z = 0; z < state_.m.size(); ++z) m3[z] = state_.m[z][2];
    return (disc_.fem.mass_p1 * m3).sum() / disc_.volume;
  }

 private:
  EnergyRow measure(int llg_iters, int eddy_iters, double tangency) const {
    EnergyRow r;
    r.t = time();
    const Vector mf = state_.m.flat();
    r.exchange = std::sqrt(std::max(0.0, mf.dot(disc_.stiffness3 * mf)));
    const Vector h = edge_coefficients();
    r.hcurl = std::sqrt(std::max(0.0, h.dot(disc_.fem.mass_nd * h) + h.dot(disc_.fem.curl_nd * h)));
    r.lambda_h12 = std::sqrt(std::max(0.0, h_half_norm_sq(disc_.bem, lambda())));
    r.kv2 = state_.kv2;
    double res = 0;
    for (Index z = 0; z < state_.m.size(); ++z)
      res = std::max(res, std::abs(state_.m[z].squaredNorm() - m0_[z].squaredNorm() - state_.accumulated_v2[z]));
    r.norm_identity_residual = res;
    r.llg_iters = llg_iters;
    r.eddy_iters = eddy_iters;
    r.mean_m3 = mean_m3();
    r.tangency = tangency;
    return r;
  }

  SimConfig config_;
  Discretization disc_;
  XhSystem system_;
  SimState state_;
  P1VecField m0_;
  EnergyTrace trace_;
  std::vector<std::string> warnings_;
};

struct RunResult {
  EnergyTrace trace;
  std::vector<std::string> warnings;
  std::string error;  // non-empty when the run aborted
};

/// Runs all steps. on_snapshot is called for step 0, every cadence steps and
/// the final step. A solver failure aborts the loop; the partial trace is
/// returned together with the error message.
inline RunResult run(Simulation& sim, const std::function<void(const Simulation&)>& on_snapshot = {}) {
  RunResult res;
  const int cadence = sim.config().snapshot_cadence();
  if (on_snapshot) on_snapshot(sim);
  try {
    while (!sim.finished()) {
      sim.step();
      if (on_snapshot && (sim.state().step % cadence == 0 || sim.finished())) on_snapshot(sim);
    }
  } catch (const SolverError& e) {
    res.error = e.what();
  }
  res.trace = sim.trace();
  res.warnings = sim.warnings();
  return res;
}

}  // namespace ellg
