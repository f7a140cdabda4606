#include "hydrostat/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hydrostat {

namespace {

// All fields are written little-endian; this is a no-op on the platforms we
// build for and asserted here once.
void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<char*>(b), 8);
}

double read_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= std::uint64_t(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

void write_array(std::ostream& out, const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) write_f64(out, data[i]);
}

void read_array(std::istream& in, double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) data[i] = read_f64(in);
}

void expect_magic(std::istream& in, const char* magic) {
    char buf[6];
    in.read(buf, 6);
    if (!in || std::memcmp(buf, magic, 6) != 0)
        throw std::runtime_error("snapshot: bad magic (expected " + std::string(magic, 5) + ")");
}

Grid read_header(std::istream& in, double& t, const char* magic) {
    expect_magic(in, magic);
    std::uint32_t nx = read_u32(in), ny = read_u32(in), nz = read_u32(in);
    double h = read_f64(in);
    t = read_f64(in);
    if (!in) throw std::runtime_error("snapshot: truncated header");
    return make_grid(int(nx), int(ny), int(nz), h);
}

void write_header(std::ostream& out, const Grid& g, double t, const char* magic) {
    out.write(magic, 6);
    write_u32(out, std::uint32_t(g.nx));
    write_u32(out, std::uint32_t(g.ny));
    write_u32(out, std::uint32_t(g.nz));
    write_f64(out, g.h);
    write_f64(out, t);
}

} // namespace

void write_snapshot(std::ostream& out, const Snapshot& s) {
    write_header(out, s.grid, s.t, "HPEQ1\0");
    write_array(out, s.v.x.data(), s.v.x.size());
    write_array(out, s.v.y.data(), s.v.y.size());
    write_array(out, s.theta.data(), s.theta.size());
}

Snapshot read_snapshot(std::istream& in) {
    Snapshot s;
    s.grid = read_header(in, s.t, "HPEQ1\0");
    s.v = HVecField(s.grid);
    s.theta = ScalarField(s.grid);
    read_array(in, s.v.x.data(), s.v.x.size());
    read_array(in, s.v.y.data(), s.v.y.size());
    read_array(in, s.theta.data(), s.theta.size());
    if (!in) throw std::runtime_error("snapshot: truncated payload");
    return s;
}

void write_snapshot_file(const std::string& path, const Snapshot& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("snapshot: cannot open '" + path + "' for writing");
    write_snapshot(out, s);
}

Snapshot read_snapshot_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("snapshot: cannot open '" + path + "'");
    return read_snapshot(in);
}

void write_basis(std::ostream& out, const NoiseBasis& basis) {
    write_header(out, basis.grid(), 0.0, "HPEQB\0");
    write_u32(out, std::uint32_t(basis.n_modes()));
    unsigned char flags[3] = {static_cast<unsigned char>(basis.phi_h_x3_independent()),
                              static_cast<unsigned char>(basis.phi3_vanishes_on_boundary()),
                              static_cast<unsigned char>(basis.psi3_vanishes_on_boundary())};
    out.write(reinterpret_cast<char*>(flags), 3);
    for (int n = 0; n < basis.n_modes(); ++n) {
        const NoiseMode& m = basis.mode(n);
        for (const auto& f : m.phi) write_array(out, f.data(), f.size());
        for (const auto& f : m.psi) write_array(out, f.data(), f.size());
        for (const auto& f : m.gamma) write_array(out, f.data(), f.size());
    }
}

NoiseBasis read_basis(std::istream& in) {
    double t;
    Grid g = read_header(in, t, "HPEQB\0");
    std::uint32_t n_modes = read_u32(in);
    unsigned char flags[3];
    in.read(reinterpret_cast<char*>(flags), 3);
    std::vector<NoiseMode> modes(n_modes);
    for (auto& m : modes) {
        for (auto& f : m.phi) {
            f = ScalarField(g);
            read_array(in, f.data(), f.size());
        }
        for (auto& f : m.psi) {
            f = ScalarField(g);
            read_array(in, f.data(), f.size());
        }
        for (auto& f : m.gamma) {
            f = ScalarField(g);
            read_array(in, f.data(), f.size());
        }
    }
    if (!in) throw std::runtime_error("basis: truncated payload");
    return NoiseBasis(g, std::move(modes), flags[0] != 0, flags[1] != 0, flags[2] != 0);
}

void write_basis_file(const std::string& path, const NoiseBasis& basis) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("basis: cannot open '" + path + "' for writing");
    write_basis(out, basis);
}

NoiseBasis read_basis_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("basis: cannot open '" + path + "'");
    return read_basis(in);
}

const char* const kCsvHeader =
    "traj,t,N0_v,N1_v,N0_theta,N1_theta,X,Y,robin_energy,l4_tilde,"
    "constraint_residual,blowup_flag";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_row(std::ostream& out, int traj, const DiagnosticsRecord& r) {
    out << traj << ',' << format_double(r.t) << ',' << format_double(r.N0_v) << ','
        << format_double(r.N1_v) << ',' << format_double(r.N0_theta) << ','
        << format_double(r.N1_theta) << ',' << format_double(r.X) << ','
        << format_double(r.Y) << ',' << format_double(r.robin_energy) << ','
        << format_double(r.l4_tilde) << ',' << format_double(r.constraint_residual) << ','
        << (r.blowup_flag ? 1 : 0) << '\n';
}

} // namespace

void write_diagnostics_csv(std::ostream& out, int trajectory,
                           const std::vector<DiagnosticsRecord>& records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) write_row(out, trajectory, r);
}

void write_ensemble_csv(std::ostream& out,
                        const std::vector<std::vector<DiagnosticsRecord>>& per_traj) {
    out << "t,n_traj";
    static const char* cols[] = {"N0_v",         "N1_v",    "N0_theta", "N1_theta",
                                 "X",            "Y",       "robin_energy", "l4_tilde",
                                 "constraint_residual"};
    for (const char* c : cols) out << ",mean_" << c << ",sem_" << c;
    out << ",n_flagged\n";

    std::size_t max_len = 0;
    for (const auto& tr : per_traj) max_len = std::max(max_len, tr.size());

    auto col_value = [](const DiagnosticsRecord& r, int c) {
        switch (c) {
            case 0: return r.N0_v;
            case 1: return r.N1_v;
            case 2: return r.N0_theta;
            case 3: return r.N1_theta;
            case 4: return r.X;
            case 5: return r.Y;
            case 6: return r.robin_energy;
            case 7: return r.l4_tilde;
            default: return r.constraint_residual;
        }
    };

    for (std::size_t row = 0; row < max_len; ++row) {
        double t = 0.0;
        int count = 0, flagged = 0;
        double mean[9] = {0};
        double m2[9] = {0};
        for (const auto& tr : per_traj) {
            if (row >= tr.size()) continue;
            const DiagnosticsRecord& r = tr[row];
            ++count;
            t = r.t;
            if (r.blowup_flag) ++flagged;
            for (int c = 0; c < 9; ++c) {
                double x = col_value(r, c);
                double d = x - mean[c];
                mean[c] += d / count;
                m2[c] += d * (x - mean[c]);
            }
        }
        if (count == 0) continue;
        out << format_double(t) << ',' << count;
        for (int c = 0; c < 9; ++c) {
            double sem = count > 1 ? std::sqrt(m2[c] / (count - 1) / count) : 0.0;
            out << ',' << format_double(mean[c]) << ',' << format_double(sem);
        }
        out << ',' << flagged << '\n';
    }
}

} // namespace hydrostat
