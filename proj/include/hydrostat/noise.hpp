#ifndef HYDROSTAT_NOISE_HPP
#define HYDROSTAT_NOISE_HPP

#include "hydrostat/domain.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace hydrostat {

// One retained transport-noise mode: the advecting fields phi_n, psi_n and
// the turbulent-pressure contraction gamma_n. Components are stored as full
// 3D fields; the x3-independence and boundary-vanishing structure is
// recorded in the basis flags and checked at construction.
struct NoiseMode {
    std::array<ScalarField, 3> phi;            // phi^1, phi^2, phi^3
    std::array<ScalarField, 3> psi;            // psi^1, psi^2, psi^3
    std::array<ScalarField, 4> gamma;          // gamma^{1,1}, gamma^{1,2}, gamma^{2,1}, gamma^{2,2}
};

class NoiseBasis {
public:
    NoiseBasis() = default;
    NoiseBasis(Grid g, std::vector<NoiseMode> modes, bool phi_h_x3_independent,
               bool phi3_vanishes_on_boundary, bool psi3_vanishes_on_boundary);

    const Grid& grid() const { return grid_; }
    int n_modes() const { return int(modes_.size()); }
    const NoiseMode& mode(int n) const { return modes_[n]; }

    bool phi_h_x3_independent() const { return phi_h_x3_independent_; }
    bool phi3_vanishes_on_boundary() const { return phi3_vanishes_on_boundary_; }
    bool psi3_vanishes_on_boundary() const { return psi3_vanishes_on_boundary_; }

    // Returns a copy with every coefficient field multiplied by lambda.
    // The parabolicity constant scales as lambda^2.
    NoiseBasis scaled(double lambda) const;

private:
    Grid grid_;
    std::vector<NoiseMode> modes_;
    bool phi_h_x3_independent_ = true;
    bool phi3_vanishes_on_boundary_ = true;
    bool psi3_vanishes_on_boundary_ = true;
};

struct KraichnanOptions {
    int n_modes = 4;
    double spectral_decay = 3.0; // must exceed 5/2 for the regularity scaling
    double amplitude = 0.1;
    std::uint64_t seed = 1;
    int k_max = 3;               // largest synthesized horizontal wavenumber
    int m_max = 2;               // largest synthesized vertical mode index
    bool phi_h_x3_independent = true;
    bool phi3_vanishes_on_boundary = true;
    bool psi3_vanishes_on_boundary = true;
    enum GammaMode { GammaZero, GammaGradPhi } gamma_mode = GammaZero;
};

// Random Fourier synthesis with coefficient decay |k|^{-s}; deterministic in
// the seed. Rejects spectral_decay <= 5/2.
NoiseBasis make_kraichnan_basis(const Grid& g, const KraichnanOptions& opt);

// Single- or multi-mode basis with spatially constant phi and psi; used by
// the parabolicity gate cases and the linear toy problems.
NoiseBasis make_constant_basis(const Grid& g, const std::array<double, 3>& phi,
                               const std::array<double, 3>& psi, int n_modes = 1);

// Measured constants for the runtime-checkable assumptions. nu_phi and
// nu_psi are the nodewise suprema of the parabolicity quadratic form,
// computed exactly as the largest eigenvalue of the 3x3 Gram matrix
// sum_n phi_n phi_n^T at each node.
struct AssumptionReport {
    double nu_phi = 0.0;
    double nu_psi = 0.0;
    double delta = 0.5;
    // L^{3+delta} norms of the l2-in-n envelopes, one per clause.
    double M_phi = 0.0;       // || |(phi_n^j)|_{l2} ||_{L^{3+delta}}, max over j
    double M_grad_phi = 0.0;  // same for (d_k phi_n^j)
    double M_gamma = 0.0;     // same for gamma components
    double M_psi_sup = 0.0;   // sup-norm envelope of psi
    double M_div_psi = 0.0;   // L^{3+delta} envelope of div psi_n
    bool phi_h_x3_independent = false;
    bool phi3_vanishes_on_boundary = false;
    bool psi3_vanishes_on_boundary = false;
    bool pass_parabolicity = false;

    double nu_max() const { return nu_phi > nu_psi ? nu_phi : nu_psi; }
};

// Parabolicity margin: pass iff max(nu_phi, nu_psi) < 2 with tolerance 1e-9.
AssumptionReport check_assumptions(const NoiseBasis& basis, double delta = 0.5);

// Derived Ito-correction fields, a_phi^{ij} = delta^{ij} + (1/2) sum phi^i phi^j
// and the b-drifts of the Stratonovich-to-Ito conversion.
struct StratCoefficients {
    // Symmetric 3x3 coefficient fields, component order
    // (11, 12, 13, 22, 23, 33).
    std::array<ScalarField, 6> a_phi;
    std::array<ScalarField, 6> a_psi;
    std::array<ScalarField, 3> b_v;
    std::array<ScalarField, 3> b_theta;
    // d_j phi_n^i for i, j in {1,2}: kernel of the projection commutator
    // P_phi; indexed [n][i*2 + j].
    std::vector<std::array<ScalarField, 4>> p_phi_kernel;
};

StratCoefficients strat_coefficients(const NoiseBasis& basis);

// Largest eigenvalue of a symmetric 3x3 matrix (closed-form trigonometric
// solve; components ordered as in StratCoefficients).
double sym3_max_eigenvalue(double a11, double a12, double a13, double a22,
                           double a23, double a33);

// Source of Brownian increments, abstract so tests can couple refinement
// levels of the same path.
struct BrownianSource {
    virtual ~BrownianSource() = default;
    virtual int n_modes() const = 0;
    virtual double dt() const = 0;
    virtual std::vector<double> increments(std::uint64_t trajectory,
                                           std::uint64_t step) const = 0;
};

// Counter-based driver: the increment for (trajectory, step, mode) is fully
// determined by the base seed through the splitmix64 finalizer
//   mix64(z): z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27;
//             z *= 0x94D049BB133111EB; z ^= z>>31;
// chained as
//   s_traj = mix64(base_seed ^ (trajectory * 0x9E3779B97F4A7C15)),
//   s_step = mix64(s_traj ^ (step * 0xD1B54A32D192ED03)),
//   s_mode = mix64(s_step ^ ((mode+1) * 0x8CB92BA72F3D8DD7)),
// and mapped to Normal(0, dt) by inverting the standard normal CDF
// (Wichura's PPND16) on the 53-bit uniform from s_mode.
class BrownianDriver final : public BrownianSource {
public:
    BrownianDriver(std::uint64_t base_seed, int n_modes, double dt);

    int n_modes() const override { return n_modes_; }
    double dt() const override { return dt_; }
    std::vector<double> increments(std::uint64_t trajectory,
                                   std::uint64_t step) const override;

    std::uint64_t base_seed() const { return base_seed_; }

    static std::uint64_t mix64(std::uint64_t z);
    static std::uint64_t trajectory_seed(std::uint64_t base_seed, std::uint64_t trajectory);
    // Standard normal quantile function, |relative error| < 1e-15.
    static double normal_quantile(double p);

private:
    std::uint64_t base_seed_;
    int n_modes_;
    double dt_;
};

} // namespace hydrostat

#endif
