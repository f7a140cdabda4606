#ifndef HYDROSTAT_STEPPER_HPP
#define HYDROSTAT_STEPPER_HPP

#include "hydrostat/diagnostics.hpp"
#include "hydrostat/domain.hpp"
#include "hydrostat/noise.hpp"
#include "hydrostat/physics.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace hydrostat {

struct SimState {
    HVecField v;
    ScalarField theta;
    double t = 0.0;
    std::int64_t step_index = 0;
    std::int64_t trajectory_index = 0;
};

struct StepperConfig {
    double dt = 1e-3;
    enum Mode { Ito, StratonovichCorrected, StratonovichHeun } mode = Ito;
    enum BcTheta { WeakRobin, StrongRobin } bc_theta = WeakRobin;
    double alpha = 0.0;
    enum Implicitness { Imex, FullyExplicit } implicitness = Imex;
    enum CoeffSource { Identity, Coefficients, StratDerived } coeff_source = Identity;
    // Relative tolerance of the post-projection divergence constraint.
    double constraint_tol = 1e-8;
};

// Everything a step may consume. Null members are treated as absent
// (no noise, no forcing, identity coefficients).
struct StepContext {
    const NoiseBasis* basis = nullptr;
    const StratCoefficients* strat = nullptr;   // required for StratonovichCorrected
    const CoefficientSet* coeffs = nullptr;     // required for non-identity sources
    const ForcingSpec* forcing = nullptr;
    const GForcing* gforcing = nullptr;
    const BrownianSource* driver = nullptr;     // required when basis has modes
};

// Step failure carried as an exception: NonFinite doubles as the blow-up
// signal, ConstraintDrift reports a post-projection divergence above the
// configured tolerance.
struct SimError : std::runtime_error {
    enum Kind { NonFinite, ConstraintDrift } kind;
    std::int64_t step_index;
    SimError(Kind k, std::int64_t step, const std::string& what)
        : std::runtime_error(what), kind(k), step_index(step) {}
};

// One IMEX Euler-Maruyama step of the Ito system (also used, with the
// conversion drift, for the corrected Stratonovich mode).
SimState step_ito(const SimState& state, const StepperConfig& config, const StepContext& ctx);

// Midpoint (Heun) predictor-corrector on the noise terms; the predictor is
// exactly the Euler-Maruyama state. Reuses the identical Brownian
// increments per (trajectory, step, mode).
SimState step_stratonovich_heun(const SimState& state, const StepperConfig& config,
                                const StepContext& ctx);

// Dispatches on config.mode.
SimState step(const SimState& state, const StepperConfig& config, const StepContext& ctx);

struct RunCallbacks {
    // Called before every step with the current state.
    std::function<void(const SimState&)> pre_step;
    // Called at every diagnostics cadence point (including t = 0).
    std::function<void(const SimState&, const DiagnosticsRecord&)> on_diagnostics;
};

struct RunOptions {
    std::int64_t n_steps = 0;
    int diag_cadence = 1;
    std::optional<double> blowup_threshold; // default: 1e6 * (initial functional + 1)
};

struct RunResult {
    SimState final_state;
    std::vector<DiagnosticsRecord> records;
    std::optional<BlowupFlag> flag;
};

// Deterministic in (driver seed, trajectory index). Emits diagnostics every
// cadence steps and stops early, with the blow-up record, when the monitor
// flags or a field goes non-finite.
RunResult run(SimState initial, const StepperConfig& config, const StepContext& ctx,
              const RunOptions& opts, const RunCallbacks& callbacks = {});

// Discrete eigenvalue of the implicit operator for the horizontal mode
// (k1, k2) and the vertical Neumann eigenmode cos(m pi k / (nz-1)):
//   |k|^2 + 2 (1 - cos(m pi / (nz-1))) / dz^2.
double implicit_eigenvalue(const Grid& g, int k1, int k2, int m);

} // namespace hydrostat

#endif
