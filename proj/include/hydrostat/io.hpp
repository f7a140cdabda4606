#ifndef HYDROSTAT_IO_HPP
#define HYDROSTAT_IO_HPP

#include "hydrostat/diagnostics.hpp"
#include "hydrostat/domain.hpp"
#include "hydrostat/noise.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hydrostat {

// Snapshot binary format, bit-exact: magic "HPEQ1\0", little-endian
// u32 nx, ny, nz, f64 h, f64 t, then the arrays v1, v2, theta as f64,
// index order x3 fastest, then x2, then x1.
struct Snapshot {
    Grid grid;
    double t = 0.0;
    HVecField v;
    ScalarField theta;
};

void write_snapshot(std::ostream& out, const Snapshot& s);
Snapshot read_snapshot(std::istream& in);
void write_snapshot_file(const std::string& path, const Snapshot& s);
Snapshot read_snapshot_file(const std::string& path);

// Noise-basis container in the same encoding (magic "HPEQB\0"): header,
// u32 N, u8 flags x3, then per mode the component-major arrays
// phi^1..3, psi^1..3, gamma^{11,12,21,22}.
void write_basis(std::ostream& out, const NoiseBasis& basis);
NoiseBasis read_basis(std::istream& in);
void write_basis_file(const std::string& path, const NoiseBasis& basis);
NoiseBasis read_basis_file(const std::string& path);

// Per-trajectory diagnostics CSV. Header row is mandatory and fixed:
//   traj,t,N0_v,N1_v,N0_theta,N1_theta,X,Y,robin_energy,l4_tilde,
//   constraint_residual,blowup_flag
extern const char* const kCsvHeader;
void write_diagnostics_csv(std::ostream& out, int trajectory,
                           const std::vector<DiagnosticsRecord>& records);

// Ensemble aggregate: per diagnostic time the mean and standard error of
// each column over trajectories (rows aligned by record index).
void write_ensemble_csv(std::ostream& out,
                        const std::vector<std::vector<DiagnosticsRecord>>& per_traj);

std::string format_double(double v); // shortest round-trip decimal (%.17g)

} // namespace hydrostat

#endif
