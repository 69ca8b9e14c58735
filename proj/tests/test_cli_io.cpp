#include "ellg/config.hpp"
#include "ellg/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace ellg;
namespace fs = std::filesystem;

namespace {

const char* benchmark_text =
    "# cube benchmark\n"
    "alpha = 0.5\n"
    "sigma = 1\n"
    "mu0 = 1.25667e-6\n"
    "Ce = 2.6e-11 / (1.25667e-6 * 6.4e11)\n"
    "k = 0.002\n"
    "T = 5\n"
    "n = 10\n"
    "theta = 1\n"
    "coupling = costabel\n";

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ellg_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Outcome {
  int status = -1;
  std::string output;
};

Outcome run_cli(const std::string& args) {
  Outcome o;
  const std::string cmd = std::string("\"") + ELLG_CLI_PATH + "\" " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return o;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) o.output.append(buf, n);
  const int st = ::pclose(p);
  o.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return o;
}

EnergyTrace sample_trace() {
  EnergyTrace t;
  for (int i = 0; i < 4; ++i) {
    EnergyRow r;
    r.t = 0.01 * i;
    r.exchange = 3.1873497823 + 1.0 / 3.0 * i;
    r.hcurl = 2.0 - 1e-17 * i;
    r.lambda_h12 = std::sqrt(2.0) * (i + 1);
    r.kv2 = 1e-300 * i;
    r.norm_identity_residual = 2.2204460492503131e-16 * i;
    r.llg_iters = 10 + i;
    r.eddy_iters = 600 + 7 * i;
    t.push_back(r);
  }
  return t;
}

}  // namespace

TEST(ParseConfig, BenchmarkValuesAccepted) {
  SimConfig c = parse_config(benchmark_text);
  EXPECT_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.mu0, 1.25667e-6);
  EXPECT_DOUBLE_EQ(c.exchange, 2.6e-11 / (1.25667e-6 * 6.4e11));
  EXPECT_EQ(c.steps, 2500);
  EXPECT_DOUBLE_EQ(c.k(), 0.002);
  EXPECT_EQ(c.n, 10);
  EXPECT_EQ(c.coupling, DtnKind::Costabel);
  // Documented defaults.
  EXPECT_EQ(c.tolerance, 1e-10);
  EXPECT_EQ(c.restart, 50);
  EXPECT_EQ(c.snapshot_cadence(), 250);
  EXPECT_EQ(c.output_dir, "output");
}

TEST(ParseConfig, ThetaOutOfRange) {
  std::string t = benchmark_text;
  t.replace(t.find("theta = 1"), 9, "theta = 1.5");
  EXPECT_THROW(parse_config(t), InvalidInput);
}

TEST(ParseConfig, StepTooLargeForDamping) {
  std::string t = benchmark_text;
  t.replace(t.find("k = 0.002"), 9, "k = 2.0");
  try {
    parse_config(t);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("k < 2*alpha"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, Errors) {
  EXPECT_THROW(parse_config(std::string(benchmark_text) + "tehta = 1\n"), ConfigError);  // unknown key
  EXPECT_THROW(parse_config(std::string(benchmark_text) + "n = 3\n"), ConfigError);      // duplicate
  std::string no_n = benchmark_text;
  no_n.erase(no_n.find("n = 10\n"), 7);
  EXPECT_THROW(parse_config(no_n), ConfigError);
  std::string no_k = benchmark_text;
  no_k.erase(no_k.find("k = 0.002\n"), 10);
  EXPECT_THROW(parse_config(no_k), ConfigError);
  EXPECT_THROW(parse_config(std::string(benchmark_text) + "restart = 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config(std::string(benchmark_text) + "tol = 1e-8 *\n"), ConfigError);
  std::string bad_cpl = benchmark_text;
  bad_cpl.replace(bad_cpl.find("costabel"), 8, "galerkin");
  EXPECT_THROW(parse_config(bad_cpl), ConfigError);
  std::string non_integer = benchmark_text;
  non_integer.replace(non_integer.find("k = 0.002"), 9, "k = 0.003");
  EXPECT_THROW(parse_config(non_integer), ConfigError);
}

TEST(ParseConfig, StepsInsteadOfK) {
  std::string t = benchmark_text;
  t.replace(t.find("k = 0.002"), 9, "steps = 500");
  SimConfig c = parse_config(t);
  EXPECT_EQ(c.steps, 500);
  EXPECT_DOUBLE_EQ(c.k(), 0.01);
}

TEST(ParseConfig, Expressions) {
  EXPECT_DOUBLE_EQ(evaluate_expression("2 * (3 + 4) / -7"), -2.0);
  EXPECT_DOUBLE_EQ(evaluate_expression(" 1e-3*2 "), 2e-3);
  EXPECT_THROW(evaluate_expression("2 +"), ConfigError);
  EXPECT_THROW(evaluate_expression("(1"), ConfigError);
}

TEST(ParseConfig, EchoReparsesIdentically) {
  std::string t = benchmark_text;
  t += "snapshot_every = 7\nquad_order = 5\ntol = 1e-11\noutput_dir = out dir/x\n";
  SimConfig c = parse_config(t);
  SimConfig d = parse_config(to_text(c));
  EXPECT_TRUE(c == d);
  EXPECT_EQ(d.output_dir, "out dir/x");
  c.coupling = DtnKind::JohnsonNedelec;
  EXPECT_TRUE(parse_config(to_text(c)) == c);
}

TEST(EnergyCsv, HeaderRowsAndRoundTrip) {
  fs::path dir = scratch_dir("csv");
  const EnergyTrace t = sample_trace();
  write_energy_csv(t, (dir / "e.csv").string());
  const std::string text = slurp(dir / "e.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "t,exchange,hcurl,lambda_h12,kv2,norm_identity_residual,llg_iters,eddy_iters");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const EnergyTrace back = read_energy_csv((dir / "e.csv").string());
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(std::memcmp(&back[i].t, &t[i].t, sizeof(double)), 0);
    EXPECT_EQ(back[i].exchange, t[i].exchange);
    EXPECT_EQ(back[i].hcurl, t[i].hcurl);
    EXPECT_EQ(back[i].lambda_h12, t[i].lambda_h12);
    EXPECT_EQ(back[i].kv2, t[i].kv2);
    EXPECT_EQ(back[i].norm_identity_residual, t[i].norm_identity_residual);
    EXPECT_EQ(back[i].llg_iters, t[i].llg_iters);
    EXPECT_EQ(back[i].eddy_iters, t[i].eddy_iters);
  }
  fs::remove_all(dir);
}

TEST(EnergyCsv, OneStepRunHasTwoRows) {
  SimConfig c;
  c.n = 1;
  c.T = 0.01;
  c.steps = 1;
  Simulation sim(c);
  RunResult res = run(sim);
  ASSERT_TRUE(res.error.empty());
  fs::path dir = scratch_dir("csv1");
  write_energy_csv(res.trace, (dir / "e.csv").string());
  const EnergyTrace back = read_energy_csv((dir / "e.csv").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].t, 0.0);
  EXPECT_EQ(back[1].t, 0.01);
  fs::remove_all(dir);
}

TEST(EnergyCsv, Errors) {
  EXPECT_THROW(write_energy_csv({}, "/tmp/never.csv"), InvalidInput);
  EXPECT_THROW(write_energy_csv(sample_trace(), "/nonexistent-dir/x/e.csv"), IoError);
}

TEST(Vtk, SingleCubeLayout) {
  TetMesh m = build_cube_mesh(1);
  P1VecField m0 = interpolate_nodal(benchmark_m0, m);
  const std::string s = format_vtk_snapshot(m, {{"m", m0.values}});
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# vtk DataFile Version 3.0");
  EXPECT_NE(s.find("\nASCII\nDATASET UNSTRUCTURED_GRID\n"), std::string::npos);
  EXPECT_NE(s.find("\nPOINTS 8 double\n"), std::string::npos);
  EXPECT_NE(s.find("\nCELLS 6 30\n"), std::string::npos);
  EXPECT_NE(s.find("\nCELL_TYPES 6\n10\n10\n10\n10\n10\n10\n"), std::string::npos);
  EXPECT_NE(s.find("\nPOINT_DATA 8\nVECTORS m double\n"), std::string::npos);
  EXPECT_EQ(s.find("CELL_DATA"), std::string::npos);
}

TEST(Vtk, GeometryOnly) {
  TetMesh m = build_cube_mesh(2);
  const std::string s = format_vtk_snapshot(m, {});
  EXPECT_EQ(s.find("POINT_DATA"), std::string::npos);
  EXPECT_EQ(s.find("VECTORS"), std::string::npos);
  EXPECT_NE(s.find("POINTS 27 double"), std::string::npos);
}

TEST(Vtk, CellDataAndSizeMismatch) {
  TetMesh m = build_cube_mesh(1);
  std::vector<Vec3> cells(6, Vec3(1, 2, 3));
  const std::string s = format_vtk_snapshot(m, {}, {{"E", cells}});
  EXPECT_NE(s.find("CELL_DATA 6\nVECTORS E double\n1 2 3\n"), std::string::npos);
  EXPECT_THROW(format_vtk_snapshot(m, {{"m", std::vector<Vec3>(7)}}), InvalidInput);
  EXPECT_THROW(format_vtk_snapshot(m, {}, {{"E", std::vector<Vec3>(8)}}), InvalidInput);
}

TEST(Vtk, ByteIdenticalAcrossRuns) {
  SimConfig c;
  c.n = 2;
  c.T = 0.02;
  c.steps = 2;
  fs::path dir = scratch_dir("vtk");
  for (const char* name : {"a.vtk", "b.vtk"}) {
    Simulation sim(c);
    run(sim);
    write_simulation_snapshot(sim, (dir / name).string());
  }
  const std::string a = slurp(dir / "a.vtk"), b = slurp(dir / "b.vtk");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("VECTORS m_normalized double"), std::string::npos);
  EXPECT_NE(a.find("VECTORS E double"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.config_text = to_text(parse_config(benchmark_text));
  m.vertices = 8;
  m.tets = 6;
  m.timings = {{"setup", 0.5}, {"total", 1.25}};
  m.outputs = {"energy.csv"};
  fs::path dir = scratch_dir("manifest");
  write_manifest(m, (dir / "manifest.json").string());
  RunManifest back = read_manifest((dir / "manifest.json").string());
  EXPECT_EQ(back.config_text, m.config_text);
  EXPECT_EQ(back.vertices, 8);
  EXPECT_EQ(back.outputs, m.outputs);
  EXPECT_TRUE(parse_config(back.config_text) == parse_config(benchmark_text));
  fs::remove_all(dir);
}

TEST(Cli, MeshInfo) {
  Outcome o = run_cli("mesh-info --n 1");
  EXPECT_EQ(o.status, 0) << o.output;
  EXPECT_NE(o.output.find("vertices: 8\n"), std::string::npos) << o.output;
  EXPECT_NE(o.output.find("tets: 6\n"), std::string::npos);
  EXPECT_NE(o.output.find("boundary triangles: 12\n"), std::string::npos);
}

TEST(Cli, UnknownCommandPrintsUsage) {
  Outcome o = run_cli("frobnicate");
  EXPECT_EQ(o.status, 2);
  EXPECT_NE(o.output.find("usage: ellg"), std::string::npos);
  EXPECT_EQ(run_cli("").status, 2);
}

TEST(Cli, BemOracle) {
  Outcome o = run_cli("bem-oracle --refine 2");
  EXPECT_EQ(o.status, 0) << o.output;
  EXPECT_NE(o.output.find("320 panels"), std::string::npos);
  // Parse the two ratios printed.
  auto ratio_after = [&](const std::string& key) {
    auto p = o.output.find(key);
    p = o.output.find("ratio = ", p);
    return std::stod(o.output.substr(p + 8));
  };
  EXPECT_NEAR(ratio_after("<V 1, 1>"), 1.0, 0.03);
  EXPECT_NEAR(ratio_after("<DtN_h 1, 1>"), 1.0, 0.05);
}

TEST(Cli, RunRejectsLargeStep) {
  fs::path dir = scratch_dir("cli_bad");
  std::string t = benchmark_text;
  t.replace(t.find("k = 0.002"), 9, "k = 1");
  std::ofstream(dir / "bad.cfg") << t;
  Outcome o = run_cli("run \"" + (dir / "bad.cfg").string() + "\"");
  EXPECT_NE(o.status, 0);
  EXPECT_NE(o.output.find("k < 2*alpha"), std::string::npos) << o.output;
  fs::remove_all(dir);
}

TEST(Cli, RunWritesOutputs) {
  fs::path dir = scratch_dir("cli_run");
  std::ofstream(dir / "tiny.cfg") << "theta = 1\nsteps = 4\nT = 0.04\nn = 1\nalpha = 0.5\nsigma = 1\n"
                                     "mu0 = 1.25667e-6\nCe = 2.6e-11 / (1.25667e-6 * 6.4e11)\n"
                                     "coupling = costabel\nsnapshot_every = 2\noutput_dir = "
                                  << (dir / "out").string() << "\n";
  Outcome o = run_cli("run \"" + (dir / "tiny.cfg").string() + "\"");
  ASSERT_EQ(o.status, 0) << o.output;
  for (const char* f : {"energy.csv", "manifest.json", "snapshot_0000.vtk", "snapshot_0002.vtk", "snapshot_0004.vtk"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  EXPECT_EQ(read_energy_csv((dir / "out" / "energy.csv").string()).size(), 5u);
  RunManifest m = read_manifest((dir / "out" / "manifest.json").string());
  for (const auto& f : m.outputs) EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  EXPECT_EQ(m.vertices, 8);
  EXPECT_EQ(m.unknowns, 9);
  EXPECT_TRUE(parse_config(m.config_text) == parse_config(slurp(dir / "tiny.cfg")));
  fs::remove_all(dir);
}

TEST(Cli, SourceConfigsParse) {
  for (const char* name : {"desk.cfg", "benchmark.cfg", "relaxation.cfg"}) {
    const fs::path p = fs::path(ELLG_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(parse_config(slurp(p))) << name;
  }
}
