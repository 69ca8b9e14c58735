// Command-line front end: run, validate, bem-oracle, mesh-info.

#include "ellg/ellg.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace ellg;

namespace {

constexpr const char* usage_text =
    "usage: ellg <command> [options]\n"
    "\n"
    "commands:\n"
    "  run <config>           run a simulation; writes energy.csv, snapshot_XXXX.vtk and\n"
    "                         manifest.json to the configured output_dir\n"
    "  validate               run the built-in invariant suite\n"
    "  bem-oracle --refine r  boundary operator values on the unit icosphere vs 4pi / -4pi\n"
    "  mesh-info --n k        statistics of the cube mesh with k subdivisions\n";

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& output_override) {
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig cfg = parse_config(read_text(config_path));
  if (!output_override.empty()) cfg.output_dir = output_override;
  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);

  Simulation sim(cfg);
  const double setup = seconds(t0);
  for (const auto& w : sim.warnings()) std::cerr << "warning: " << w << "\n";
  const auto& d = sim.discretization();
  std::printf("mesh: %d vertices, %d tets, %d edges, %d boundary triangles; %d coupled unknowns\n",
              d.mesh.num_vertices(), d.mesh.num_tets(), d.mesh.num_edges(), d.surface.num_triangles(),
              d.dofs.size());
  std::printf("steps: %d, k = %.6g, theta = %.6g, coupling = %s\n", cfg.steps, cfg.k(), cfg.theta,
              to_string(cfg.coupling));

  RunManifest manifest = make_manifest(sim);
  const auto t1 = std::chrono::steady_clock::now();
  double io_seconds = 0;
  const RunResult res = run(sim, [&](const Simulation& s) {
    const auto ts = std::chrono::steady_clock::now();
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%04d.vtk", s.state().step);
    write_simulation_snapshot(s, (dir / name).string());
    manifest.outputs.push_back(name);
    io_seconds += seconds(ts);
    const EnergyRow& r = s.trace().back();
    std::printf("t = %-8.4g exchange = %-12.6g hcurl = %-12.6g mean m3 = %.6f\n", r.t, r.exchange, r.hcurl,
                r.mean_m3);
    std::fflush(stdout);
  });
  const double loop = seconds(t1) - io_seconds;

  write_energy_csv(res.trace, (dir / "energy.csv").string());
  manifest.outputs.push_back("energy.csv");
  manifest.timings = {{"setup", setup}, {"time_loop", loop}, {"snapshot_io", io_seconds}, {"total", seconds(t0)}};
  manifest.error = res.error;
  write_manifest(manifest, (dir / "manifest.json").string());
  if (!res.error.empty()) {
    std::cerr << "error: " << res.error << " (partial trace written to " << (dir / "energy.csv").string() << ")\n";
    return 1;
  }
  std::printf("done in %.2f s; outputs in %s\n", seconds(t0), cfg.output_dir.c_str());
  return 0;
}

int cmd_validate() {
  const auto t0 = std::chrono::steady_clock::now();
  int failures = 0;
  for (const Check& c : validation_suite()) {
    std::printf("%s  %-36s %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    failures += c.passed ? 0 : 1;
  }
  std::printf("%d check(s) failed; %.2f s\n", failures, seconds(t0));
  return failures == 0 ? 0 : 1;
}

int cmd_bem_oracle(int refine) {
  const SphereOracle o = sphere_oracle(refine);
  std::printf("icosphere refinements %d: %d panels\n", o.refinements, o.panels);
  std::printf("<V 1, 1>     = %.10f   4 pi = %.10f   ratio = %.6f\n", o.single_layer, 4 * pi,
              o.single_layer / (4 * pi));
  std::printf("<DtN_h 1, 1> = %.10f  -4 pi = %.10f  ratio = %.6f\n", o.dtn, -4 * pi, o.dtn / (-4 * pi));
  std::printf("assembly: %.2f s\n", o.seconds);
  return 0;
}

int cmd_mesh_info(int n) {
  TetMesh mesh = build_cube_mesh(n);
  const TriMesh surf = extract_boundary(mesh);
  const MeshQuality q = mesh_quality(mesh);
  const XhDofMap dofs = build_xh_dofmap(mesh);
  std::printf("vertices: %d\n", mesh.num_vertices());
  std::printf("tets: %d\n", mesh.num_tets());
  std::printf("edges: %d\n", mesh.num_edges());
  std::printf("faces: %zu\n", static_cast<std::size_t>(mesh.face_count));
  std::printf("boundary triangles: %d\n", surf.num_triangles());
  std::printf("boundary vertices: %zu\n", mesh.boundary_vertices.size());
  std::printf("boundary edges: %zu\n", mesh.boundary_edges.size());
  std::printf("coupled unknowns: %d\n", dofs.size());
  std::printf("h: %.6g\n", mesh.h);
  std::printf("dihedral angles: [%.4f, %.4f] deg\n", q.min_dihedral_deg, q.max_dihedral_deg);
  std::printf("max diameter/inradius: %.6g\n", q.max_shape_ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FEM-BEM eddy-current / LLG integrator"};
  app.require_subcommand(0, 1);

  std::string config_path, output_dir;
  auto* run_cmd = app.add_subcommand("run", "run a simulation");
  run_cmd->add_option("config", config_path, "configuration file")->required();
  run_cmd->add_option("-o,--output-dir", output_dir, "override output_dir from the config");

  auto* validate_cmd = app.add_subcommand("validate", "run the built-in invariant suite");

  int refine = 2;
  auto* bem_cmd = app.add_subcommand("bem-oracle", "sphere oracle for the boundary operators");
  bem_cmd->add_option("--refine", refine, "icosphere refinements (0-6)")->check(CLI::Range(0, 6));

  int n = 1;
  auto* mesh_cmd = app.add_subcommand("mesh-info", "cube mesh statistics");
  mesh_cmd->add_option("--n", n, "subdivisions per axis")->check(CLI::PositiveNumber);

  // Anything that is not a known subcommand is a usage error.
  if (argc < 2 || (argv[1][0] != '-' && !app.get_subcommand_no_throw(argv[1]))) {
    if (argc >= 2) std::cerr << "ellg: unknown command '" << argv[1] << "'\n";
    std::cerr << usage_text;
    return 2;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return cmd_run(config_path, output_dir);
    if (*validate_cmd) return cmd_validate();
    if (*bem_cmd) return cmd_bem_oracle(refine);
    if (*mesh_cmd) return cmd_mesh_info(n);
    std::cerr << usage_text;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
