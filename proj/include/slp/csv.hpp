#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "slp/cw_spectra.hpp"
#include "slp/dispersion.hpp"
#include "slp/dynamics.hpp"

namespace slp {

/// Nine significant digits, C locale.
std::string format_number(double v);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// One row per (snapshot, node), every `z_stride`-th node of every
/// `t_stride`-th snapshot.
void write_snapshot_csv(std::ostream& out, const Trajectory& traj, int z_stride = 1, int t_stride = 1);

void write_dispersion_csv(std::ostream& out, const std::vector<DispersionPoint>& points);

/// delta in Hz (delta / 2 pi) next to the spectrum with both controls and the
/// transmission with the backward control off.
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum, const std::vector<double>& t_bd_off);

/// Opens `path` for writing and runs `body`; throws IoError on failure.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws ValidationError naming the column if absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace slp
