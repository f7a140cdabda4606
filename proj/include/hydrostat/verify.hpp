#ifndef HYDROSTAT_VERIFY_HPP
#define HYDROSTAT_VERIFY_HPP

#include "hydrostat/domain.hpp"
#include "hydrostat/noise.hpp"
#include "hydrostat/stepper.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hydrostat {

// One measured quantity with its pinned tolerance. cmp is "<" or ">=",
// value cmp tolerance deciding pass.
struct CheckLine {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    std::string cmp = "<";
    bool pass = false;
};

struct SuiteResult {
    std::string name;
    std::vector<CheckLine> checks;
    double elapsed_seconds = 0.0;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

CheckLine check_lt(const std::string& name, double value, double tol);
CheckLine check_ge(const std::string& name, double value, double tol);

// Random smooth field: low horizontal modes (|k| <= kmax) with random
// coefficients and random vertical Neumann-cosine profiles (m <= mmax).
// Deterministic in the seed; the same seed produces the same continuum
// function on every grid, so refinement studies see one field.
ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, int kmax = 2, int mmax = 2);

// Projection suite: idempotency, contraction, orthogonality, commutation and
// the divergence constraint over n_fields random fields.
SuiteResult verify_projection(const Grid& g, int n_fields, std::uint64_t seed);

// Kadlec A.1: beta = 0 exact Fourier-cosine field at (32,32,33), and beta = 1
// manufactured Robin-compatible field with Richardson order across the
// vertical pair (17, 33).
SuiteResult verify_kadlec(int nx, int ny, int nz_fine);

// Cancellation identities across a refinement triple of grids.
SuiteResult verify_cancellation(const std::vector<Grid>& grids);

// Stratonovich consistency: corrected-Ito vs Heun weak means on the linear
// theta toy (single constant mode psi = (c,0,0)).
struct StratSuiteParams {
    double c = 0.5;
    double dt = 5e-4;
    double T = 0.1;
    int n_traj = 2000;
    std::uint64_t seed = 7;
    int nx = 8, ny = 8, nz = 5;
    double h = 1.0;
    int threads = 0; // 0 = hardware
};
SuiteResult verify_strat(const StratSuiteParams& p);

// Temperature L^2 energy balance residual at dt and dt/2 on the same toy.
SuiteResult verify_energy(const StratSuiteParams& p);

// Parabolicity gate classification against the eigenvalue oracle.
SuiteResult verify_parabolicity(const Grid& g);

std::vector<SuiteResult> verify_all(const std::vector<Grid>& cancellation_grids,
                                    const StratSuiteParams& strat_params);

void print_suite(std::ostream& out, const SuiteResult& r);

// Dispatches n jobs over a small worker pool; job indices are dense. Used
// for ensemble trajectories (one trajectory per job, no shared state).
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace hydrostat

#endif
