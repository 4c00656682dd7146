#include "slp/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace slp {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,tau,stage,flux_fwd,flux_bwd,spin_norm,centroid,width,intensity_total\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_number(traj.t[i]) << ',' << format_number(traj.tau[i]) << ',' << traj.stage[i] << ','
        << format_number(traj.flux_forward[i]) << ',' << format_number(traj.flux_backward[i]) << ','
        << format_number(traj.spin_norm[i]) << ',' << format_number(traj.centroid[i]) << ','
        << format_number(traj.width[i]) << ',' << format_number(traj.intensity_total[i]) << '\n';
  }
}

void write_snapshot_csv(std::ostream& out, const Trajectory& traj, int z_stride, int t_stride) {
  if (z_stride < 1 || t_stride < 1) throw ValidationError("snapshot strides must be at least 1");
  out << "t,z,re_S,im_S,abs_psi_plus,abs_psi_minus\n";
  for (std::size_t s = 0; s < traj.snapshots.size(); s += static_cast<std::size_t>(t_stride)) {
    const auto& st = traj.snapshots[s];
    const std::string t = format_number(st.t);
    for (Eigen::Index j = 0; j < st.S.size(); j += z_stride) {
      out << t << ',' << format_number(traj.z[j]) << ',' << format_number(st.S[j].real()) << ','
          << format_number(st.S[j].imag()) << ',' << format_number(std::abs(st.psi_plus[j])) << ','
          << format_number(std::abs(st.psi_minus[j])) << '\n';
    }
  }
}

void write_dispersion_csv(std::ostream& out, const std::vector<DispersionPoint>& points) {
  out << "k,re_omega,im_omega\n";
  for (const auto& p : points)
    out << format_number(p.k) << ',' << format_number(p.omega.real()) << ',' << format_number(p.omega.imag()) << '\n';
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum, const std::vector<double>& t_bd_off) {
  if (t_bd_off.size() != spectrum.detunings.size())
    throw ValidationError("BD-off transmission is on a different detuning grid");
  out << "delta_Hz,T,R,A,T_bd_off\n";
  for (std::size_t k = 0; k < spectrum.detunings.size(); ++k) {
    out << format_number(spectrum.detunings[k] / kTwoPi) << ',' << format_number(spectrum.T[k]) << ','
        << format_number(spectrum.R[k]) << ',' << format_number(spectrum.A[k]) << ','
        << format_number(t_bd_off[k]) << '\n';
  }
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  body(out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return k;
  throw ValidationError("missing column '" + name + "'");
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const std::size_t k = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(k));
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != table.header.size())
      throw ValidationError(path.string() + ": row width does not match the header");
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace slp
