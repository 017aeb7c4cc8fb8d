#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "viscoflux/errors.hpp"
#include "viscoflux/radial_solver.hpp"

namespace viscoflux::io {

/// Doubles are printed with 17 significant digits so values survive a text round trip.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Collects the files produced under one output directory, relative to it.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IntegrityError("cannot create output directory " + root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const { return root_; }
  const std::vector<std::string>& files() const { return files_; }

  std::ofstream open(const std::string& rel) {
    const auto p = root_ / rel;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os) throw IntegrityError("cannot write " + p.string());
    files_.push_back(rel);
    return os;
  }

  void write_json(const std::string& rel, const nlohmann::json& j) { open(rel) << j.dump(2) << '\n'; }

  /// CSV with a header row; every row must have as many entries as the header.
  void write_csv(const std::string& rel, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, const std::string& preamble = {}) {
    auto os = open(rel);
    if (!preamble.empty()) os << preamble << '\n';
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << fmt(r[c]);
      os << '\n';
    }
  }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

inline const std::vector<std::string>& snapshot_columns() {
  static const std::vector<std::string> cols{"r_center", "rho", "v_face_left", "F", "stress"};
  return cols;
}

inline void write_snapshot(OutputDir& out, const std::string& rel, const RadialState& st, const MaterialLaw& law) {
  std::vector<std::vector<double>> rows;
  rows.reserve(st.rho.size());
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    rows.push_back({st.grid.center(i), st.rho[i], st.v[i], cell_flux(st, law, i), cell_stress(st, law, i)});
  }
  out.write_csv(rel, snapshot_columns(), rows, "# t=" + fmt(st.t));
}

/// Reads a snapshot written by write_snapshot. The wall velocity is pinned to zero by the
/// solver, so the face velocities are complete.
inline RadialState read_snapshot(const std::filesystem::path& path, double r_max) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read snapshot " + path.string(), "run");
  std::string line;
  RadialState st;
  if (!std::getline(is, line) || line.rfind("# t=", 0) != 0) {
    throw ConfigError("snapshot " + path.string() + " lacks the '# t=' header", "run");
  }
  st.t = std::stod(line.substr(4));
  if (!std::getline(is, line)) throw ConfigError("snapshot " + path.string() + " lacks a column header", "run");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 5) throw ConfigError("snapshot " + path.string() + ": expected 5 columns", "run");
    st.rho.push_back(v[1]);
    st.v.push_back(v[2]);
  }
  st.v.push_back(0.0);
  st.grid = {r_max, st.rho.size()};
  return st;
}

} // namespace viscoflux::io
