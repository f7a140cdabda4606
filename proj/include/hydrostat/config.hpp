#ifndef HYDROSTAT_CONFIG_HPP
#define HYDROSTAT_CONFIG_HPP

#include "hydrostat/noise.hpp"
#include "hydrostat/stepper.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace hydrostat {

// Full run description, parsed from the INI-style config file. Sections and
// keys are fixed; unknown ones are rejected. Units: h and the horizontal
// period share one length unit (the period is 2*pi), dt and every time
// column are in the matching time unit, alpha is 1/length, kappa couples
// temperature to pressure per length.
struct SimConfigFile {
    // [grid]
    int nx = 16, ny = 16, nz = 9;
    double h = 1.0;
    // [time]
    double dt = 1e-3;
    std::int64_t n_steps = 100;
    int diag_cadence = 1;
    // [noise]
    enum NoiseKind { NoiseZero, NoiseKraichnan, NoiseConstant, NoiseFile } noise_kind =
        NoiseKraichnan;
    std::string noise_file; // coefficient fields supplied by an external tool
    int noise_modes = 4;
    double noise_s = 3.0;
    double noise_sigma = 0.1;
    std::uint64_t noise_seed = 1;
    double noise_delta = 0.5;
    bool phi_h_x3_independent = true;
    bool phi3_boundary_vanish = true;
    bool psi3_boundary_vanish = true;
    enum GammaMode { GammaZero, GammaGradPhi } gamma_mode = GammaZero;
    std::array<double, 3> const_phi = {0.0, 0.0, 0.0};
    std::array<double, 3> const_psi = {0.0, 0.0, 0.0};
    // [physics]: defaults are kappa = 1, G = 0, Coriolis forcing.
    StepperConfig::Mode mode = StepperConfig::Ito;
    StepperConfig::BcTheta bc_theta = StepperConfig::WeakRobin;
    double alpha = 0.0;
    double kappa = 1.0;
    enum ForcingKind { ForcingZero, ForcingCoriolis, ForcingDamping } forcing = ForcingCoriolis;
    double k0 = 1.0;
    double damping = 0.0;
    // [ensemble]
    int n_traj = 1;
    std::uint64_t base_seed = 1;
    // [output]
    std::string output_dir = "out";
    int snapshots_every = 0; // 0 = no snapshots
    bool write_csv = true;
    bool write_snapshots = false;

    NoiseBasis build_basis(const Grid& g) const;
    ForcingSpec build_forcing() const;
    StepperConfig build_stepper_config() const;
};

// Parses the INI content; throws std::invalid_argument naming the offending
// line on unknown sections/keys or malformed values.
SimConfigFile parse_config(std::istream& in);
SimConfigFile parse_config_file(const std::string& path);

} // namespace hydrostat

#endif
