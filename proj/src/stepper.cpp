#include "hydrostat/stepper.hpp"

#include <cmath>
#include <limits>

namespace hydrostat {

namespace {

using cplx = std::complex<double>;

// Horizontal means of the diffusion coefficients: the implicit operator is
// c1 d11 + c2 d22 + d/dx3 (prof(x3) d/dx3 .) with the boundary condition
// folded into the top row. Horizontal coefficient variation stays explicit
// (stability restriction dt <~ dx^2 / ||a_H - mean||).
struct MeanDiffusion {
    double c1 = 1.0;
    double c2 = 1.0;
    std::vector<double> prof; // a^{33} horizontal-mean profile over x3

    static MeanDiffusion identity(const Grid& g) {
        MeanDiffusion m;
        m.prof.assign(g.nz, 1.0);
        return m;
    }

    static MeanDiffusion from_coefficients(const std::array<ScalarField, 6>& a) {
        const Grid& g = a[0].grid();
        MeanDiffusion m;
        m.prof.assign(g.nz, 0.0);
        double s1 = 0.0, s2 = 0.0;
        const double inv_h = 1.0 / double(g.horizontal_size());
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j)
                for (int k = 0; k < g.nz; ++k) m.prof[k] += a[5](i, j, k) * inv_h;
        // volume means of a^{11}, a^{22} with trapezoid weights
        HorizontalField m11 = vertical_average(a[0]);
        HorizontalField m22 = vertical_average(a[3]);
        for (std::size_t n = 0; n < m11.size(); ++n) {
            s1 += m11.data()[n];
            s2 += m22.data()[n];
        }
        m.c1 = s1 * inv_h;
        m.c2 = s2 * inv_h;
        return m;
    }

    // Explicit application (used to form the remainder L - mean part).
    ScalarField apply(const ScalarField& f, const VerticalBC& bc) const {
        const Grid& g = f.grid();
        ProjectionWorkspace& ws = workspace_for(g);
        cplx* a = ws.scratch(1);
        ws.forward(f, a);
        const int nyc = ws.nyc();
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < nyc; ++j) {
                double k1 = g.kx(i), k2 = j;
                double mul = -(c1 * k1 * k1 + c2 * k2 * k2);
                cplx* col = a + (std::size_t(i) * nyc + j) * g.nz;
                for (int k = 0; k < g.nz; ++k) col[k] *= mul;
            }
        ScalarField out(g);
        ws.backward(a, out);
        ScalarField a33(g);
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j)
                for (int k = 0; k < g.nz; ++k) a33(i, j, k) = prof[k];
        out += d33_flux(f, a33, bc);
        return out;
    }
};

// Solves (I - dt (c1 d11 + c2 d22 + d3 prof d3)) x = rhs in place,
// one complex tridiagonal system per horizontal mode.
void implicit_solve(ScalarField& rhs, double dt, const VerticalBC& bc,
                    const MeanDiffusion& md) {
    const Grid& g = rhs.grid();
    ProjectionWorkspace& ws = workspace_for(g);
    cplx* a = ws.scratch(1);
    ws.forward(rhs, a);

    const int nz = g.nz;
    const int nyc = ws.nyc();
    const double dz = g.dz();
    const double idz2 = 1.0 / (dz * dz);

    std::vector<double> am(nz - 1);
    for (int k = 0; k + 1 < nz; ++k) am[k] = 0.5 * (md.prof[k] + md.prof[k + 1]);

    std::vector<double> dia(nz), sub(nz), sup(nz), cp(nz);
    std::vector<cplx> dp(nz);

    // bc-independent row structure
    sup[0] = -2.0 * dt * am[0] * idz2;
    for (int k = 1; k < nz - 1; ++k) {
        sub[k] = -dt * am[k - 1] * idz2;
        sup[k] = -dt * am[k] * idz2;
    }
    sub[nz - 1] = -2.0 * dt * am[nz - 2] * idz2;

    double robin_extra = 0.0;
    if (bc.kind == VerticalBC::Robin)
        robin_extra = 2.0 * dt * bc.alpha * md.prof[nz - 1] / dz;

    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < nyc; ++j) {
            double k1 = g.kx(i), k2 = j;
            double hfac = dt * (md.c1 * k1 * k1 + md.c2 * k2 * k2);

            dia[0] = 1.0 + hfac + 2.0 * dt * am[0] * idz2;
            for (int k = 1; k < nz - 1; ++k)
                dia[k] = 1.0 + hfac + dt * (am[k] + am[k - 1]) * idz2;
            dia[nz - 1] = 1.0 + hfac + 2.0 * dt * am[nz - 2] * idz2 + robin_extra;

            cplx* col = a + (std::size_t(i) * nyc + j) * nz;
            // Thomas algorithm
            cp[0] = sup[0] / dia[0];
            dp[0] = col[0] / dia[0];
            for (int k = 1; k < nz; ++k) {
                double m = dia[k] - sub[k] * cp[k - 1];
                cp[k] = k < nz - 1 ? sup[k] / m : 0.0;
                dp[k] = (col[k] - sub[k] * dp[k - 1]) / m;
            }
            col[nz - 1] = dp[nz - 1];
            for (int k = nz - 2; k >= 0; --k) col[k] = dp[k] - cp[k] * col[k + 1];
        }

    ws.backward(a, rhs);
}

VerticalBC theta_bc(const StepperConfig& c) { return VerticalBC::robin(c.alpha); }

struct Assembled {
    HVecField drift_v;     // explicit drift for v (projected)
    ScalarField drift_t;   // explicit drift for theta
    std::vector<HVecField> diff_v;
    std::vector<ScalarField> diff_t;
};

Assembled assemble_explicit(const SimState& s, const StepperConfig& config,
                            const StepContext& ctx, const MeanDiffusion& mdv,
                            const MeanDiffusion& mdt) {
    const Grid& g = s.v.grid();
    Assembled out;

    ScalarField kappa =
        ctx.coeffs ? ctx.coeffs->kappa : ScalarField(g, 1.0);

    HVecField ev(g);
    ev -= nonlinear_v(s.v);
    ev += j_kappa(s.theta, kappa);
    if (ctx.forcing) ev += ctx.forcing->f_v(s.v, s.theta);
    if (ctx.basis && config.mode == StepperConfig::Ito) {
        if (ctx.gforcing)
            ev += p_gamma_full(s.v, *ctx.basis, *ctx.gforcing);
        else
            ev += p_gamma_phi(s.v, *ctx.basis);
    }
    if (config.mode == StepperConfig::StratonovichCorrected && ctx.basis)
        ev += strat_correction_v(s.v, *ctx.strat, *ctx.basis);

    ScalarField et(g);
    et -= nonlinear_theta(s.v, s.theta);
    if (ctx.forcing) et += ctx.forcing->f_theta(s.v, s.theta);
    if (config.mode == StepperConfig::StratonovichCorrected && ctx.basis)
        et += strat_correction_theta(s.theta, *ctx.strat, *ctx.basis, config.alpha);

    // Non-identity diffusion: the deviation of L from its horizontal-mean
    // part is integrated explicitly.
    if (ctx.coeffs && config.coeff_source != StepperConfig::Identity) {
        HVecField lv = apply_Lv(s.v, *ctx.coeffs);
        lv.x -= mdv.apply(s.v.x, VerticalBC::neumann());
        lv.y -= mdv.apply(s.v.y, VerticalBC::neumann());
        ev += lv;
        ScalarField lt = apply_Ltheta_strong(s.theta, *ctx.coeffs);
        lt -= mdt.apply(s.theta, theta_bc(config));
        et += lt;
    }

    out.drift_v = hydrostatic_project(ev);
    out.drift_t = std::move(et);

    if (ctx.basis && ctx.basis->n_modes() > 0) {
        GForcing none;
        const GForcing& gf = ctx.gforcing ? *ctx.gforcing : none;
        out.diff_v = stochastic_diffusion_v(s.v, *ctx.basis, gf);
        out.diff_t = stochastic_diffusion_theta(s.theta, *ctx.basis, gf);
    }
    return out;
}

void check_finite(const SimState& s) {
    if (!s.v.finite() || !s.theta.finite())
        throw SimError(SimError::NonFinite, s.step_index,
                       "non-finite field after step " + std::to_string(s.step_index));
}

void check_constraint(const SimState& s, const StepperConfig& config) {
    auto [bx, by] = vertical_average(s.v);
    double div = l2_norm(div_h(bx, by));
    if (div == 0.0) return;
    double scale = h1_norm(s.v);
    if (div > config.constraint_tol * scale)
        throw SimError(SimError::ConstraintDrift, s.step_index,
                       "post-projection divergence " + std::to_string(div) +
                           " exceeds tolerance at step " + std::to_string(s.step_index));
}

void validate(const StepperConfig& config, const StepContext& ctx) {
    if (!(config.dt > 0.0)) throw std::invalid_argument("stepper: dt must be positive");
    if (config.mode == StepperConfig::StratonovichCorrected && !ctx.strat)
        throw std::invalid_argument("stepper: corrected Stratonovich mode needs coefficients");
    if (config.mode != StepperConfig::Ito && ctx.basis) {
        if (!ctx.basis->phi_h_x3_independent())
            throw std::invalid_argument(
                "stepper: Stratonovich modes require x3-independent phi_H");
        if (!ctx.basis->psi3_vanishes_on_boundary())
            throw std::invalid_argument(
                "stepper: Stratonovich modes require psi^3 to vanish on the "
                "boundaries (the conversion drift needs a_psi^{3j}|_boundary = 0)");
        // The turbulent-pressure commutator enters through the conversion
        // drift; a nonzero gamma would be double counted.
        for (int n = 0; n < ctx.basis->n_modes(); ++n)
            for (const auto& f : ctx.basis->mode(n).gamma)
                for (std::size_t t = 0; t < f.size(); ++t)
                    if (f.data()[t] != 0.0)
                        throw std::invalid_argument(
                            "stepper: Stratonovich modes require zero gamma fields");
        if (config.mode == StepperConfig::StratonovichHeun && ctx.gforcing &&
            !ctx.gforcing->empty())
            throw std::invalid_argument(
                "stepper: Heun mode integrates pure transport noise (no G terms)");
    }
    if (config.coeff_source != StepperConfig::Identity && !ctx.coeffs)
        throw std::invalid_argument("stepper: coefficient source requires a CoefficientSet");
    if (ctx.basis && ctx.basis->n_modes() > 0 && !ctx.driver)
        throw std::invalid_argument("stepper: noise basis supplied without a driver");
}

std::pair<MeanDiffusion, MeanDiffusion> mean_diffusions(const StepperConfig& config,
                                                        const StepContext& ctx,
                                                        const Grid& g) {
    if (config.coeff_source == StepperConfig::Identity || !ctx.coeffs)
        return {MeanDiffusion::identity(g), MeanDiffusion::identity(g)};
    return {MeanDiffusion::from_coefficients(ctx.coeffs->a_v),
            MeanDiffusion::from_coefficients(ctx.coeffs->a_theta)};
}

SimState advance(const SimState& s, const StepperConfig& config,
                 const HVecField& rhs_v, const ScalarField& rhs_t,
                 const MeanDiffusion& mdv, const MeanDiffusion& mdt) {
    SimState next;
    next.v = rhs_v;
    next.theta = rhs_t;
    if (config.implicitness == StepperConfig::Imex) {
        implicit_solve(next.v.x, config.dt, VerticalBC::neumann(), mdv);
        implicit_solve(next.v.y, config.dt, VerticalBC::neumann(), mdv);
        implicit_solve(next.theta, config.dt, theta_bc(config), mdt);
    }
    next.v = hydrostatic_project(next.v);
    dealias(next.v);
    dealias(next.theta);
    next.t = s.t + config.dt;
    next.step_index = s.step_index + 1;
    next.trajectory_index = s.trajectory_index;
    return next;
}

// rhs = state + dt * (drift + explicit Laplacian if fully explicit) + noise.
void base_rhs(const SimState& s, const StepperConfig& config, const Assembled& parts,
              const MeanDiffusion& mdv, const MeanDiffusion& mdt, HVecField& rhs_v,
              ScalarField& rhs_t) {
    rhs_v = s.v;
    rhs_v.axpy(config.dt, parts.drift_v);
    rhs_t = s.theta;
    rhs_t.axpy(config.dt, parts.drift_t);
    if (config.implicitness == StepperConfig::FullyExplicit) {
        rhs_v.x.axpy(config.dt, mdv.apply(s.v.x, VerticalBC::neumann()));
        rhs_v.y.axpy(config.dt, mdv.apply(s.v.y, VerticalBC::neumann()));
        rhs_t.axpy(config.dt, mdt.apply(s.theta, theta_bc(config)));
    }
}

} // namespace

SimState step_ito(const SimState& state, const StepperConfig& config, const StepContext& ctx) {
    validate(config, ctx);
    const Grid& g = state.v.grid();
    auto [mdv, mdt] = mean_diffusions(config, ctx, g);

    Assembled parts = assemble_explicit(state, config, ctx, mdv, mdt);
    HVecField rhs_v(g);
    ScalarField rhs_t(g);
    base_rhs(state, config, parts, mdv, mdt, rhs_v, rhs_t);

    if (!parts.diff_v.empty()) {
        std::vector<double> db = ctx.driver->increments(state.trajectory_index, state.step_index);
        for (std::size_t n = 0; n < parts.diff_v.size(); ++n) {
            rhs_v.axpy(db[n], parts.diff_v[n]);
            rhs_t.axpy(db[n], parts.diff_t[n]);
        }
    }

    SimState next = advance(state, config, rhs_v, rhs_t, mdv, mdt);
    check_finite(next);
    check_constraint(next, config);
    return next;
}

SimState step_stratonovich_heun(const SimState& state, const StepperConfig& config,
                                const StepContext& ctx) {
    validate(config, ctx);
    const Grid& g = state.v.grid();
    auto [mdv, mdt] = mean_diffusions(config, ctx, g);

    // Drift is evaluated at the pre-step state; the predictor is the plain
    // Euler-Maruyama state and only the noise amplitude is averaged.
    StepperConfig base = config;
    base.mode = StepperConfig::Ito;
    Assembled parts = assemble_explicit(state, base, ctx, mdv, mdt);

    HVecField rhs_v(g);
    ScalarField rhs_t(g);
    base_rhs(state, config, parts, mdv, mdt, rhs_v, rhs_t);

    if (parts.diff_v.empty()) {
        SimState next = advance(state, config, rhs_v, rhs_t, mdv, mdt);
        check_finite(next);
        check_constraint(next, config);
        return next;
    }

    std::vector<double> db = ctx.driver->increments(state.trajectory_index, state.step_index);

    HVecField pred_v = rhs_v;
    ScalarField pred_t = rhs_t;
    for (std::size_t n = 0; n < parts.diff_v.size(); ++n) {
        pred_v.axpy(db[n], parts.diff_v[n]);
        pred_t.axpy(db[n], parts.diff_t[n]);
    }
    SimState star = advance(state, config, pred_v, pred_t, mdv, mdt);
    check_finite(star);

    GForcing none;
    const GForcing& gf = ctx.gforcing ? *ctx.gforcing : none;
    std::vector<HVecField> diff_v_star = stochastic_diffusion_v(star.v, *ctx.basis, gf);
    std::vector<ScalarField> diff_t_star =
        stochastic_diffusion_theta(star.theta, *ctx.basis, gf);

    for (std::size_t n = 0; n < parts.diff_v.size(); ++n) {
        rhs_v.axpy(0.5 * db[n], parts.diff_v[n]);
        rhs_v.axpy(0.5 * db[n], diff_v_star[n]);
        rhs_t.axpy(0.5 * db[n], parts.diff_t[n]);
        rhs_t.axpy(0.5 * db[n], diff_t_star[n]);
    }

    SimState next = advance(state, config, rhs_v, rhs_t, mdv, mdt);
    check_finite(next);
    check_constraint(next, config);
    return next;
}

SimState step(const SimState& state, const StepperConfig& config, const StepContext& ctx) {
    if (config.mode == StepperConfig::StratonovichHeun)
        return step_stratonovich_heun(state, config, ctx);
    return step_ito(state, config, ctx);
}

RunResult run(SimState initial, const StepperConfig& config, const StepContext& ctx,
              const RunOptions& opts, const RunCallbacks& callbacks) {
    RunResult result;
    NormTracker tracker;
    SimState s = std::move(initial);

    // running partial sums of the temperature L^2 balance (left endpoint,
    // the Ito-natural evaluation)
    double balance_grad = 0.0, balance_robin = 0.0, balance_noise = 0.0;
    GForcing no_g;

    auto make_record = [&](const SimState& st) {
        tracker.update(st.v, st.theta, st.t);
        DiagnosticsRecord rec;
        rec.t = st.t;
        tracker.fill(rec);
        auto [x, y] = xy_functionals(st.v);
        rec.X = x;
        rec.Y = y;
        rec.robin_energy = robin_energy(st.theta, config.alpha);
        double l4 = l4_norm(fluctuation(st.v));
        rec.l4_tilde = l4 * l4 * l4 * l4;
        auto [bx, by] = vertical_average(st.v);
        rec.constraint_residual = l2_norm(div_h(bx, by));
        rec.balance_grad = balance_grad;
        rec.balance_robin = balance_robin;
        rec.balance_noise = balance_noise;
        return rec;
    };

    auto accumulate_balance = [&](const SimState& st) {
        balance_grad += 2.0 * config.dt * robin_energy(st.theta, 0.0);
        if (config.alpha != 0.0) {
            HorizontalField top = trace_top(st.theta);
            HorizontalField sq(st.theta.grid());
            for (std::size_t t = 0; t < sq.size(); ++t)
                sq.data()[t] = top.data()[t] * top.data()[t];
            balance_robin += 2.0 * config.dt * config.alpha * integrate(sq);
        }
        if (ctx.basis && ctx.basis->n_modes() > 0) {
            auto diff = stochastic_diffusion_theta(
                st.theta, *ctx.basis, ctx.gforcing ? *ctx.gforcing : no_g);
            for (const auto& d : diff) balance_noise += config.dt * inner(d, d);
        }
    };

    DiagnosticsRecord rec0 = make_record(s);
    BlowupMonitor monitor;
    monitor.threshold = opts.blowup_threshold
                            ? *opts.blowup_threshold
                            : BlowupMonitor::default_threshold(rec0.blowup_functional());
    monitor.horizon = double(opts.n_steps) * config.dt;
    if (auto flag = monitor.check(rec0)) {
        rec0.blowup_flag = true;
        result.flag = flag;
    }
    if (callbacks.on_diagnostics) callbacks.on_diagnostics(s, rec0);
    result.records.push_back(rec0);
    if (result.flag) {
        result.final_state = std::move(s);
        return result;
    }

    for (std::int64_t n = 0; n < opts.n_steps; ++n) {
        if (callbacks.pre_step) callbacks.pre_step(s);
        accumulate_balance(s);
        try {
            s = step(s, config, ctx);
        } catch (const SimError& err) {
            // ConstraintDrift is a solver defect, not blow-up; it propagates
            // with the step index attached.
            if (err.kind == SimError::ConstraintDrift) throw;
            // Blow-up terminator: record the failure and stop.
            DiagnosticsRecord rec;
            rec.t = s.t + config.dt;
            tracker.fill(rec);
            rec.blowup_flag = true;
            result.flag = BlowupFlag{rec.t, std::numeric_limits<double>::infinity(),
                                     std::string("numerical (") + err.what() + ")"};
            if (callbacks.on_diagnostics) callbacks.on_diagnostics(s, rec);
            result.records.push_back(rec);
            result.final_state = std::move(s);
            return result;
        }
        bool cadence = ((n + 1) % opts.diag_cadence == 0) || n + 1 == opts.n_steps;
        if (cadence) {
            DiagnosticsRecord rec = make_record(s);
            if (auto flag = monitor.check(rec)) {
                rec.blowup_flag = true;
                result.flag = flag;
            }
            if (callbacks.on_diagnostics) callbacks.on_diagnostics(s, rec);
            result.records.push_back(rec);
            if (result.flag) break;
        }
    }
    result.final_state = std::move(s);
    return result;
}

double implicit_eigenvalue(const Grid& g, int k1, int k2, int m) {
    const double dz = g.dz();
    double vert = 2.0 * (1.0 - std::cos(m * 3.14159265358979323846 / (g.nz - 1))) / (dz * dz);
    return double(k1) * k1 + double(k2) * k2 + vert;
}

} // namespace hydrostat
