#pragma once

// Output writers: energy trace CSV and legacy ASCII VTK snapshots.

#include "ellg/config.hpp"
#include "ellg/stepper.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ellg {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* energy_csv_header =
    "t,exchange,hcurl,lambda_h12,kv2,norm_identity_residual,llg_iters,eddy_iters";

namespace io_detail {
inline void put(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  f.close();
  if (!f) throw IoError("write to '" + path + "' failed");
}
}  // namespace io_detail

inline std::string format_energy_csv(const EnergyTrace& trace) {
  std::string out = energy_csv_header;
  out += '\n';
  for (const auto& r : trace) {
    for (double v : {r.t, r.exchange, r.hcurl, r.lambda_h12, r.kv2, r.norm_identity_residual}) {
      io_detail::put(out, v);
      out += ',';
    }
    out += std::to_string(r.llg_iters);
    out += ',';
    out += std::to_string(r.eddy_iters);
    out += '\n';
  }
  return out;
}

/// Header line plus one row per trace entry, numbers with 17 significant
/// digits, '\n' line endings.
inline void write_energy_csv(const EnergyTrace& trace, const std::string& path) {
  if (trace.empty()) throw InvalidInput("write_energy_csv: empty trace");
  io_detail::write_file(path, format_energy_csv(trace));
}

/// Reads the columns written by write_energy_csv (diagnostic-only fields of
/// EnergyRow stay zero).
inline EnergyTrace read_energy_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line != energy_csv_header) throw IoError("'" + path + "': unexpected CSV header");
  EnergyTrace trace;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw IoError("'" + path + "': expected 8 columns, got " + std::to_string(cells.size()));
    EnergyRow r;
    r.t = std::stod(cells[0]);
    r.exchange = std::stod(cells[1]);
    r.hcurl = std::stod(cells[2]);
    r.lambda_h12 = std::stod(cells[3]);
    r.kv2 = std::stod(cells[4]);
    r.norm_identity_residual = std::stod(cells[5]);
    r.llg_iters = std::stoi(cells[6]);
    r.eddy_iters = std::stoi(cells[7]);
    trace.push_back(r);
  }
  return trace;
}

struct NamedVectors {
  std::string name;
  std::vector<Vec3> values;
};

inline std::string format_vtk_snapshot(const TetMesh& mesh, const std::vector<NamedVectors>& point_data,
                                       const std::vector<NamedVectors>& cell_data = {},
                                       const std::string& title = "ellg snapshot") {
  for (const auto& f : point_data)
    if (static_cast<Index>(f.values.size()) != mesh.num_vertices())
      throw InvalidInput("write_vtk_snapshot: point field '" + f.name + "' has " + std::to_string(f.values.size()) +
                         " values for " + std::to_string(mesh.num_vertices()) + " vertices");
  for (const auto& f : cell_data)
    if (static_cast<Index>(f.values.size()) != mesh.num_tets())
      throw InvalidInput("write_vtk_snapshot: cell field '" + f.name + "' has " + std::to_string(f.values.size()) +
                         " values for " + std::to_string(mesh.num_tets()) + " cells");
  std::string out;
  auto vec = [&out](const Vec3& v) {
    io_detail::put(out, v[0]);
    out += ' ';
    io_detail::put(out, v[1]);
    out += ' ';
    io_detail::put(out, v[2]);
    out += '\n';
  };
  out += "# vtk DataFile Version 3.0\n";
  out += title + "\n";
  out += "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(mesh.num_vertices()) + " double\n";
  for (const auto& p : mesh.vertices) vec(p);
  out += "CELLS " + std::to_string(mesh.num_tets()) + " " + std::to_string(5 * mesh.num_tets()) + "\n";
  for (const auto& t : mesh.tets)
    out += "4 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + " " +
           std::to_string(t[3]) + "\n";
  out += "CELL_TYPES " + std::to_string(mesh.num_tets()) + "\n";
  for (Index t = 0; t < mesh.num_tets(); ++t) out += "10\n";
  if (!point_data.empty()) {
    out += "POINT_DATA " + std::to_string(mesh.num_vertices()) + "\n";
    for (const auto& f : point_data) {
      out += "VECTORS " + f.name + " double\n";
      for (const auto& v : f.values) vec(v);
    }
  }
  if (!cell_data.empty()) {
    out += "CELL_DATA " + std::to_string(mesh.num_tets()) + "\n";
    for (const auto& f : cell_data) {
      out += "VECTORS " + f.name + " double\n";
      for (const auto& v : f.values) vec(v);
    }
  }
  return out;
}

/// Legacy VTK 3.0 ASCII unstructured grid of tetrahedra (cell type 10) with
/// optional POINT_DATA and CELL_DATA vector sections, in mesh order.
inline void write_vtk_snapshot(const TetMesh& mesh, const std::vector<NamedVectors>& point_data,
                               const std::string& path, const std::vector<NamedVectors>& cell_data = {}) {
  io_detail::write_file(path, format_vtk_snapshot(mesh, point_data, cell_data));
}

/// Standard snapshot of a simulation: m, its normalised copy and the
/// vertex-averaged H as point data; H and E = curl H / sigma per cell.
inline void write_simulation_snapshot(const Simulation& sim, const std::string& path) {
  const auto& m = sim.state().m;
  std::vector<Vec3> unit(m.values.size());
  for (std::size_t z = 0; z < unit.size(); ++z) unit[z] = m.values[z].normalized();
  write_vtk_snapshot(sim.discretization().mesh,
                     {{"m", m.values}, {"m_normalized", unit}, {"H", sim.field_vertices().values}}, path,
                     {{"H_cell", sim.field_cells()}, {"E", sim.electric_field()}});
}

/// Record of one `run` invocation, written as manifest.json next to the
/// outputs. config_text is the to_text() echo and reparses to the same
/// configuration.
struct RunManifest {
  std::string config_text;
  std::string version = ellg::version;
  Index vertices = 0, tets = 0, edges = 0, boundary_triangles = 0, unknowns = 0;
  double h = 0;
  std::vector<std::pair<std::string, double>> timings;  // seconds
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  std::string error;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["config"] = config_text;
    j["mesh"] = {{"vertices", vertices},  {"tets", tets}, {"edges", edges}, {"boundary_triangles", boundary_triangles},
                 {"unknowns", unknowns}, {"h", h}};
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [name, s] : timings) t[name] = s;
    j["timings"] = t;
    j["outputs"] = outputs;
    j["warnings"] = warnings;
    if (!error.empty()) j["error"] = error;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    const auto& mesh = j.at("mesh");
    m.vertices = mesh.at("vertices").get<Index>();
    m.tets = mesh.at("tets").get<Index>();
    m.edges = mesh.at("edges").get<Index>();
    m.boundary_triangles = mesh.at("boundary_triangles").get<Index>();
    m.unknowns = mesh.at("unknowns").get<Index>();
    m.h = mesh.at("h").get<double>();
    for (const auto& [name, s] : j.at("timings").items()) m.timings.emplace_back(name, s.get<double>());
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("error")) m.error = j.at("error").get<std::string>();
    return m;
  }
};

inline RunManifest make_manifest(const Simulation& sim) {
  RunManifest m;
  const auto& d = sim.discretization();
  m.config_text = to_text(sim.config());
  m.vertices = d.mesh.num_vertices();
  m.tets = d.mesh.num_tets();
  m.edges = d.mesh.num_edges();
  m.boundary_triangles = static_cast<Index>(d.surface.triangles.size());
  m.unknowns = d.dofs.size();
  m.h = d.mesh.h;
  m.warnings = sim.warnings();
  return m;
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
  io_detail::write_file(path, m.to_json().dump(2) + "\n");
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  return RunManifest::from_json(nlohmann::json::parse(f));
}

}  // namespace ellg
