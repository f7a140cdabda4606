#include "hydrostat/verify.hpp"

#include "hydrostat/diagnostics.hpp"
#include "hydrostat/operators.hpp"
#include "hydrostat/physics.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

namespace hydrostat {

CheckLine check_lt(const std::string& name, double value, double tol) {
    return {name, value, tol, "<", value < tol};
}

CheckLine check_ge(const std::string& name, double value, double tol) {
    return {name, value, tol, ">=", value >= tol};
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = int(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& th : pool) th.join();
}

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

struct FieldRng {
    std::uint64_t state;
    explicit FieldRng(std::uint64_t s) : state(s) {}
    double gauss() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = BrownianDriver::mix64(state);
        double u = double(z >> 11) * 0x1.0p-53 + 0x1.0p-54;
        return BrownianDriver::normal_quantile(u);
    }
    ScalarField field(const Grid& g) {
        ScalarField f(g);
        for (std::size_t n = 0; n < f.size(); ++n) f.data()[n] = gauss();
        return f;
    }
};

} // namespace

ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, int kmax, int mmax) {
    ScalarField f(g);
    FieldRng rng(seed);
    for (int k1 = -kmax; k1 <= kmax; ++k1)
        for (int k2 = 0; k2 <= kmax; ++k2)
            for (int m = 0; m <= mmax; ++m) {
                double a = rng.gauss(), b = rng.gauss();
                for (int i = 0; i < g.nx; ++i)
                    for (int j = 0; j < g.ny; ++j) {
                        double ph = k1 * g.x1(i) + k2 * g.x2(j);
                        double hval = a * std::cos(ph) + b * std::sin(ph);
                        for (int k = 0; k < g.nz; ++k) {
                            double prof = std::cos(m * kPi * (g.x3(k) + g.h) / g.h);
                            f(i, j, k) += 0.2 * hval * prof;
                        }
                    }
            }
    return f;
}

SuiteResult verify_projection(const Grid& g, int n_fields, std::uint64_t seed) {
    Timer timer;
    SuiteResult r;
    r.name = "projection";
    FieldRng rng(seed);

    double max_idem = 0.0, max_contract = 0.0, max_div = 0.0, max_orth = 0.0,
           max_commute = 0.0, max_recon = 0.0;

    for (int t = 0; t < n_fields; ++t) {
        HVecField f(g);
        f.x = rng.field(g);
        f.y = rng.field(g);
        double fn = l2_norm(f);
        double fh1 = h1_norm(f);

        HVecField pf = hydrostatic_project(f);
        HVecField ppf = hydrostatic_project(pf);
        max_idem = std::max(max_idem, l2_norm(ppf - pf) / fn);

        max_contract = std::max(max_contract, l2_norm(pf) / fn - 1.0);

        auto [qx, qy] = hydrostatic_q(f);
        HVecField qlift = lift(qx, qy);
        max_orth = std::max(max_orth, std::fabs(inner(pf, qlift)) / (fn * fn));

        HVecField recon = pf + qlift;
        max_recon = std::max(max_recon, l2_norm(recon - f) / fn);

        auto [bx, by] = vertical_average(pf);
        max_div = std::max(max_div, l2_norm(div_h(bx, by)) / fh1);

        // d3 P f = d3 f and d_i P f = P d_i f
        HVecField d3pf = d3(pf), d3f = d3(f);
        double d3n = l2_norm(d3f);
        if (d3n > 0.0) max_commute = std::max(max_commute, l2_norm(d3pf - d3f) / d3n);
        HVecField dxf(g);
        dxf.x = deriv_h(f.x, 1);
        dxf.y = deriv_h(f.y, 1);
        HVecField a = hydrostatic_project(dxf);
        HVecField b(g);
        b.x = deriv_h(pf.x, 1);
        b.y = deriv_h(pf.y, 1);
        double dn = l2_norm(dxf);
        if (dn > 0.0) max_commute = std::max(max_commute, l2_norm(a - b) / dn);
    }

    r.checks.push_back(check_lt("idempotency", max_idem, 1e-12));
    r.checks.push_back(check_lt("contraction_excess", max_contract, 1e-12));
    r.checks.push_back(check_lt("divergence_ratio", max_div, 1e-10));
    r.checks.push_back(check_lt("orthogonality", max_orth, 1e-10));
    r.checks.push_back(check_lt("commutation", max_commute, 1e-10));
    r.checks.push_back(check_lt("reconstruction", max_recon, 1e-12));
    r.elapsed_seconds = timer.seconds();
    return r;
}

namespace {

// Robin-compatible vertical wavenumber: smallest a > 0 with a tan(a h) = beta,
// found by bisection on (0, pi/(2h)).
double robin_wavenumber(double beta, double h) {
    double lo = 1e-8, hi = kPi / (2.0 * h) - 1e-8;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double f = mid * std::tan(mid * h) - beta;
        if (f > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

SuiteResult verify_kadlec(int nx, int ny, int nz_fine) {
    Timer timer;
    SuiteResult r;
    r.name = "kadlec";

    // beta = 0: pure Fourier-cosine field, exactly resolved by the discrete
    // operators (the vertical structure is trivial, the horizontal part is
    // spectral-exact), so the identity closes to roundoff.
    {
        Grid g = make_grid(nx, ny, nz_fine, 1.0);
        ScalarField f = eval_on_grid(
            [](double x1, double x2, double) { return std::cos(2.0 * x1) * std::cos(x2); }, g);
        r.checks.push_back(check_lt("beta0_relative_residual", kadlec_residual(f, 0.0), 1e-6));
    }

    // beta = 1: manufactured Robin-compatible profile cos(a (x3 + h)) with
    // a tan(a h) = 1; genuine O(dz^2) residual, Richardson order across the
    // vertical pair.
    const double h = 1.0;
    const double arobin = robin_wavenumber(1.0, h);
    {
        auto field = [&](const Grid& g) {
            return eval_on_grid(
                [&](double x1, double x2, double x3) {
                    return (std::cos(x1) + 0.5 * std::sin(x2)) * std::cos(arobin * (x3 + h));
                },
                g);
        };
        int nz_coarse = (nz_fine - 1) / 2 + 1;
        Grid gc = make_grid(nx, ny, nz_coarse, h);
        Grid gf = make_grid(nx, ny, nz_fine, h);
        double rc = kadlec_residual(field(gc), 1.0);
        double rf = kadlec_residual(field(gf), 1.0);
        double order = std::log2(rc / rf);
        r.checks.push_back(check_ge("beta1_richardson_order", order, 1.9));
    }

    // variable-coefficient inequality (eps = 0.5): C from brute-force
    // maximization over a corpus of admissible (a, f) pairs, then the
    // inequality re-checked corpus-wide with that constant
    {
        Grid g = make_grid(16, 16, 17, h);
        auto normalized = [&](std::uint64_t seed) {
            ScalarField s = random_smooth_field(g, seed);
            double sup = 0.0;
            for (std::size_t t = 0; t < s.size(); ++t)
                sup = std::max(sup, std::fabs(s.data()[t]));
            if (sup > 0.0) s *= 1.0 / sup;
            return s;
        };
        auto coeffs = [&](std::uint64_t seed) {
            // a = I + mild smooth perturbation; Gershgorin keeps the
            // smallest eigenvalue above 0.4
            std::array<ScalarField, 6> a;
            a[0] = ScalarField(g, 1.0);
            a[3] = ScalarField(g, 1.0);
            a[5] = ScalarField(g, 1.0);
            a[0].axpy(0.3, normalized(seed));
            a[3].axpy(0.3, normalized(seed + 1));
            a[5].axpy(0.3, normalized(seed + 2));
            a[1] = normalized(seed + 3);
            a[1] *= 0.15;
            a[2] = normalized(seed + 4);
            a[2] *= 0.15;
            a[4] = ScalarField(g);
            return a;
        };

        const double eps = 0.5;
        std::vector<Kadlec2Forms> corpus;
        for (int p = 0; p < 8; ++p)
            corpus.push_back(kadlec2_forms(random_smooth_field(g, 900 + p), coeffs(500 + 10 * p), 0.0));
        for (int p = 0; p < 4; ++p) {
            ScalarField f = eval_on_grid(
                [&](double x1, double x2, double x3) {
                    return (std::cos(x1 + 0.2 * p) + std::sin((p % 2 + 1) * x2)) *
                           std::cos(arobin * (x3 + h));
                },
                g);
            corpus.push_back(kadlec2_forms(f, coeffs(700 + 10 * p), 1.0));
        }

        double C = 0.0;
        bool rhs_positive = true;
        for (const auto& k : corpus) {
            C = std::max(C, (k.lhs - (1.0 + eps) * k.rhs1) / k.l2);
            rhs_positive = rhs_positive && k.rhs1 > 0.0;
        }
        bool holds = true;
        for (const auto& k : corpus)
            holds = holds && k.lhs <= (1.0 + eps) * k.rhs1 + C * k.l2 + 1e-9 * k.lhs;
        r.checks.push_back(check_lt("kadlec2_C", std::isfinite(C) ? C : 1e30, 1e3));
        r.checks.push_back(check_ge("kadlec2_rhs_positive", rhs_positive ? 1.0 : 0.0, 1.0));
        r.checks.push_back(check_ge("kadlec2_holds_with_C", holds ? 1.0 : 0.0, 1.0));
    }
    r.elapsed_seconds = timer.seconds();
    return r;
}

namespace {

// Constrained smooth test pair: random low-mode fields with mixed vertical
// profiles, projected so the constraint holds exactly. Single-profile
// manufactured fields turn out to cancel exactly by horizontal trig
// orthogonality and carry no measurable truncation signal.
HVecField cancellation_test_v(const Grid& g) {
    HVecField v(g);
    v.x = random_smooth_field(g, 101);
    v.y = random_smooth_field(g, 202);
    return hydrostatic_project(v);
}

ScalarField cancellation_test_theta(const Grid& g) {
    return random_smooth_field(g, 303);
}

} // namespace

SuiteResult verify_cancellation(const std::vector<Grid>& grids) {
    Timer timer;
    SuiteResult r;
    r.name = "cancellation";

    std::vector<double> res_v, res_t, res_pair;
    for (const Grid& g : grids) {
        HVecField v = cancellation_test_v(g);
        ScalarField theta = cancellation_test_theta(g);
        res_v.push_back(cancellation_residual_v(v));
        res_t.push_back(cancellation_residual_theta(v, theta));
        // weak/strong pairing gap at the same resolution
        ScalarField phi = random_smooth_field(g, 404);
        double strong = inner(nonlinear_theta(v, theta), phi);
        double weak = weak_form_pairing(v, theta, phi);
        double scale = l2_norm(nonlinear_theta(v, theta)) * l2_norm(phi);
        res_pair.push_back(std::fabs(strong - weak) / scale);
    }

    auto order_of = [](const std::vector<double>& res) {
        return std::log2(res.front() / res.back()) / double(res.size() - 1);
    };
    bool dec_v = true, dec_t = true;
    for (std::size_t i = 0; i + 1 < res_v.size(); ++i) {
        dec_v = dec_v && res_v[i + 1] < res_v[i];
        dec_t = dec_t && res_t[i + 1] < res_t[i];
    }
    r.checks.push_back(check_ge("v_residual_decreasing", dec_v ? 1.0 : 0.0, 1.0));
    r.checks.push_back(check_ge("theta_residual_decreasing", dec_t ? 1.0 : 0.0, 1.0));
    r.checks.push_back(check_ge("v_order", order_of(res_v), 1.9));
    r.checks.push_back(check_ge("theta_order", order_of(res_t), 1.9));
    r.checks.push_back(check_ge("pairing_order", order_of(res_pair), 1.9));
    r.checks.push_back(check_lt("v_residual_finest", res_v.back(), 1e-3));
    r.elapsed_seconds = timer.seconds();
    return r;
}

namespace {

struct ToyEnsembleResult {
    double mean = 0.0;
    double sem = 0.0;
};

struct BalanceEnsembleResult {
    double mean_R = 0.0;
    double sem_R = 0.0;
};

SimState theta_toy_ic(const Grid& g) {
    SimState s;
    s.v = HVecField(g);
    s.theta = eval_on_grid([](double x1, double, double) { return std::cos(x1); }, g);
    return s;
}

ToyEnsembleResult run_theta_toy(const StratSuiteParams& p, StepperConfig::Mode mode) {
    Grid g = make_grid(p.nx, p.ny, p.nz, p.h);
    NoiseBasis basis = make_constant_basis(g, {0, 0, 0}, {p.c, 0, 0});
    StratCoefficients sc = strat_coefficients(basis);
    const std::int64_t n_steps = std::llround(p.T / p.dt);

    StepperConfig config;
    config.dt = p.dt;
    config.mode = mode;
    config.alpha = 0.0;

    std::vector<double> samples(p.n_traj, 0.0);
    parallel_for(p.n_traj, p.threads, [&](int traj) {
        BrownianDriver driver(p.seed, basis.n_modes(), p.dt);
        StepContext ctx;
        ctx.basis = &basis;
        ctx.strat = &sc;
        ctx.driver = &driver;
        SimState s = theta_toy_ic(g);
        s.trajectory_index = traj;
        for (std::int64_t n = 0; n < n_steps; ++n) s = step(s, config, ctx);
        double l2 = l2_norm(s.theta);
        samples[traj] = l2 * l2;
    });

    ToyEnsembleResult out;
    for (double x : samples) out.mean += x;
    out.mean /= p.n_traj;
    double var = 0.0;
    for (double x : samples) var += (x - out.mean) * (x - out.mean);
    var /= (p.n_traj - 1);
    out.sem = std::sqrt(var / p.n_traj);
    return out;
}

BalanceEnsembleResult run_balance_toy(const StratSuiteParams& p, double dt) {
    Grid g = make_grid(p.nx, p.ny, p.nz, p.h);
    NoiseBasis basis = make_constant_basis(g, {0, 0, 0}, {p.c, 0, 0});
    const std::int64_t n_steps = std::llround(p.T / dt);

    StepperConfig config;
    config.dt = dt;
    config.mode = StepperConfig::Ito;
    config.alpha = 0.0;

    std::vector<double> samples(p.n_traj, 0.0);
    parallel_for(p.n_traj, p.threads, [&](int traj) {
        BrownianDriver driver(p.seed + 1, basis.n_modes(), dt);
        StepContext ctx;
        ctx.basis = &basis;
        ctx.driver = &driver;
        SimState s = theta_toy_ic(g);
        s.trajectory_index = traj;
        double theta0_sq = l2_norm(s.theta) * l2_norm(s.theta);
        double grad_int = 0.0, noise_int = 0.0;
        GForcing none;
        for (std::int64_t n = 0; n < n_steps; ++n) {
            // left-endpoint accumulation of the Ito identity integrals
            grad_int += dt * robin_energy(s.theta, config.alpha);
            auto diff = stochastic_diffusion_theta(s.theta, basis, none);
            for (const auto& d : diff) noise_int += dt * inner(d, d);
            s = step(s, config, ctx);
        }
        double l2 = l2_norm(s.theta);
        samples[traj] = l2 * l2 + 2.0 * grad_int - noise_int - theta0_sq;
    });

    BalanceEnsembleResult out;
    for (double x : samples) out.mean_R += x;
    out.mean_R /= p.n_traj;
    double var = 0.0;
    for (double x : samples) var += (x - out.mean_R) * (x - out.mean_R);
    var /= (p.n_traj - 1);
    out.sem_R = std::sqrt(var / p.n_traj);
    return out;
}

} // namespace

SuiteResult verify_strat(const StratSuiteParams& p) {
    Timer timer;
    SuiteResult r;
    r.name = "strat";
    ToyEnsembleResult corrected = run_theta_toy(p, StepperConfig::StratonovichCorrected);
    ToyEnsembleResult heun = run_theta_toy(p, StepperConfig::StratonovichHeun);
    double diff = std::fabs(corrected.mean - heun.mean);
    double band = 3.0 * std::sqrt(corrected.sem * corrected.sem + heun.sem * heun.sem);
    r.checks.push_back(check_lt("mode_equivalence_gap", diff, band));
    // Stratonovich transport conserves the L2 norm pathwise, so both means
    // track the purely diffusive decay exp(-2 lam T) of the initial mode
    Grid g = make_grid(p.nx, p.ny, p.nz, p.h);
    SimState ic = theta_toy_ic(g);
    double e0 = l2_norm(ic.theta) * l2_norm(ic.theta);
    double lam = implicit_eigenvalue(g, 1, 0, 0);
    double exact = e0 * std::exp(-2.0 * lam * p.T);
    r.checks.push_back(check_lt("corrected_vs_diffusive_decay",
                                std::fabs(corrected.mean - exact) / exact, 0.01));
    r.checks.push_back(check_lt("heun_vs_diffusive_decay",
                                std::fabs(heun.mean - exact) / exact, 0.01));
    r.elapsed_seconds = timer.seconds();
    return r;
}

SuiteResult verify_energy(const StratSuiteParams& p) {
    Timer timer;
    SuiteResult r;
    r.name = "energy";
    BalanceEnsembleResult coarse = run_balance_toy(p, p.dt);
    BalanceEnsembleResult fine = run_balance_toy(p, p.dt / 2.0);
    double band = 3.0 * std::sqrt(coarse.sem_R * coarse.sem_R + fine.sem_R * fine.sem_R);
    r.checks.push_back(
        check_lt("balance_halving", std::fabs(fine.mean_R),
                 0.6 * std::fabs(coarse.mean_R) + band));
    r.checks.push_back(check_lt("balance_coarse_magnitude", std::fabs(coarse.mean_R), 1.0));
    r.elapsed_seconds = timer.seconds();
    return r;
}

SuiteResult verify_parabolicity(const Grid& g) {
    Timer timer;
    SuiteResult r;
    r.name = "parabolicity";

    // pass case nu = 1 and fail case nu = 2, classified against the
    // power-iteration oracle on the 3x3 Gram matrix
    NoiseBasis pass_basis = make_constant_basis(g, {1.0, 0.0, 0.0}, {0.5, 0.5, 0.0});
    NoiseBasis fail_basis =
        make_constant_basis(g, {std::sqrt(2.0), 0.0, 0.0}, {0.0, 0.0, 0.0});

    AssumptionReport pass_rep = check_assumptions(pass_basis, 0.5);
    AssumptionReport fail_rep = check_assumptions(fail_basis, 0.5);

    // oracle: power iteration on sum phi phi^T for the constant matrices
    auto power_oracle = [](const std::array<double, 3>& u) {
        double m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = u[i] * u[j];
        double x[3] = {1.0, 0.7, 0.3};
        double lam = 0.0;
        for (int it = 0; it < 200; ++it) {
            double y[3] = {0, 0, 0};
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) y[i] += m[i][j] * x[j];
            lam = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
            if (lam == 0.0) return 0.0;
            for (int i = 0; i < 3; ++i) x[i] = y[i] / lam;
        }
        return lam;
    };

    double oracle_pass = power_oracle({1.0, 0.0, 0.0});
    double oracle_fail = power_oracle({std::sqrt(2.0), 0.0, 0.0});

    r.checks.push_back(check_lt("nu_pass_vs_oracle", std::fabs(pass_rep.nu_phi - oracle_pass), 1e-9));
    r.checks.push_back(check_lt("nu_fail_vs_oracle", std::fabs(fail_rep.nu_phi - oracle_fail), 1e-9));
    r.checks.push_back(check_ge("pass_classified", pass_rep.pass_parabolicity ? 1.0 : 0.0, 1.0));
    r.checks.push_back(check_lt("fail_classified", fail_rep.pass_parabolicity ? 1.0 : 0.0, 0.5));
    r.elapsed_seconds = timer.seconds();
    return r;
}

std::vector<SuiteResult> verify_all(const std::vector<Grid>& cancellation_grids,
                                    const StratSuiteParams& strat_params) {
    std::vector<SuiteResult> out;
    out.push_back(verify_projection(make_grid(16, 16, 9, 1.0), 100, 42));
    out.push_back(verify_kadlec(32, 32, 33));
    out.push_back(verify_cancellation(cancellation_grids));
    out.push_back(verify_strat(strat_params));
    out.push_back(verify_energy(strat_params));
    return out;
}

void print_suite(std::ostream& out, const SuiteResult& r) {
    for (const auto& c : r.checks) {
        out << (c.pass ? "[PASS] " : "[FAIL] ") << r.name << '.' << c.name
            << " value=" << c.value << " " << c.cmp << " tol=" << c.tolerance << "\n";
    }
    out << "# " << r.name << " elapsed_s=" << r.elapsed_seconds << "\n";
}

} // namespace hydrostat
