#include "hydrostat/noise.hpp"

#include "hydrostat/operators.hpp"

#include <algorithm>
#include <cmath>

namespace hydrostat {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

bool column_constant(const ScalarField& f) {
    const Grid& g = f.grid();
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 1; k < g.nz; ++k)
                if (f(i, j, k) != f(i, j, 0)) return false;
    return true;
}

bool boundary_zero(const ScalarField& f) {
    const Grid& g = f.grid();
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            if (f(i, j, 0) != 0.0 || f(i, j, g.nz - 1) != 0.0) return false;
    return true;
}

} // namespace

NoiseBasis::NoiseBasis(Grid g, std::vector<NoiseMode> modes, bool phi_h_x3_independent,
                       bool phi3_vanishes_on_boundary, bool psi3_vanishes_on_boundary)
    : grid_(g),
      modes_(std::move(modes)),
      phi_h_x3_independent_(phi_h_x3_independent),
      phi3_vanishes_on_boundary_(phi3_vanishes_on_boundary),
      psi3_vanishes_on_boundary_(psi3_vanishes_on_boundary) {
    for (const auto& m : modes_) {
        for (const auto& f : m.phi)
            if (!f.finite()) throw std::invalid_argument("NoiseBasis: non-finite phi");
        for (const auto& f : m.psi)
            if (!f.finite()) throw std::invalid_argument("NoiseBasis: non-finite psi");
        for (const auto& f : m.gamma)
            if (!f.finite()) throw std::invalid_argument("NoiseBasis: non-finite gamma");
        if (phi_h_x3_independent_) {
            if (!column_constant(m.phi[0]) || !column_constant(m.phi[1]))
                throw std::invalid_argument(
                    "NoiseBasis: phi_h flagged x3-independent but varies along x3");
            for (const auto& f : m.gamma)
                if (!column_constant(f))
                    throw std::invalid_argument(
                        "NoiseBasis: gamma flagged x3-independent but varies along x3");
        }
        if (phi3_vanishes_on_boundary_ && !boundary_zero(m.phi[2]))
            throw std::invalid_argument("NoiseBasis: phi^3 does not vanish on the boundary");
        if (psi3_vanishes_on_boundary_ && !boundary_zero(m.psi[2]))
            throw std::invalid_argument("NoiseBasis: psi^3 does not vanish on the boundary");
    }
}

NoiseBasis NoiseBasis::scaled(double lambda) const {
    NoiseBasis out = *this;
    for (auto& m : out.modes_) {
        for (auto& f : m.phi) f *= lambda;
        for (auto& f : m.psi) f *= lambda;
        for (auto& f : m.gamma) f *= lambda;
    }
    return out;
}

namespace {

struct SplitMix {
    std::uint64_t state;
    explicit SplitMix(std::uint64_t s) : state(s) {}
    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        return BrownianDriver::mix64(state);
    }
    double uniform() { return double(next() >> 11) * 0x1.0p-53 + 0x1.0p-54; }
    double gauss() { return BrownianDriver::normal_quantile(uniform()); }
};

} // namespace

NoiseBasis make_kraichnan_basis(const Grid& g, const KraichnanOptions& opt) {
    if (opt.spectral_decay <= 2.5)
        throw std::invalid_argument(
            "make_kraichnan_basis: spectral decay s must exceed 5/2 "
            "(H^{3/2+gamma} regularity scaling)");
    if (opt.n_modes < 1) throw std::invalid_argument("make_kraichnan_basis: N >= 1 required");
    if (!(opt.amplitude >= 0.0))
        throw std::invalid_argument("make_kraichnan_basis: amplitude must be >= 0");

    SplitMix rng(opt.seed);
    const double norm = opt.amplitude / std::sqrt(double(opt.n_modes));
    const double s = opt.spectral_decay;

    std::vector<NoiseMode> modes;
    modes.reserve(opt.n_modes);

    // Horizontal synthesis: f(x_H) = sum_{k} |k|^{-s} (a cos(k.x) + b sin(k.x)).
    auto synth_horizontal = [&](SplitMix& r) {
        HorizontalField f(g);
        for (int k1 = -opt.k_max; k1 <= opt.k_max; ++k1)
            for (int k2 = 0; k2 <= opt.k_max; ++k2) {
                if (k2 == 0 && k1 <= 0) continue; // one half-plane, avoids duplicates
                double kn = std::sqrt(double(k1 * k1 + k2 * k2));
                double amp = std::pow(kn, -s);
                double a = r.gauss() * amp, b = r.gauss() * amp;
                for (int i = 0; i < g.nx; ++i)
                    for (int j = 0; j < g.ny; ++j) {
                        double ph = k1 * g.x1(i) + k2 * g.x2(j);
                        f(i, j) += a * std::cos(ph) + b * std::sin(ph);
                    }
            }
        return f;
    };

    // Vertical profile stack: sine modes vanish on both boundaries, cosine
    // modes satisfy Neumann ends.
    auto synth_vertical = [&](SplitMix& r, bool sine) {
        ScalarField f(g);
        for (int m = 1; m <= opt.m_max; ++m) {
            HorizontalField hf = synth_horizontal(r);
            double mfac = std::pow(double(m), -s);
            for (int i = 0; i < g.nx; ++i)
                for (int j = 0; j < g.ny; ++j)
                    for (int k = 0; k < g.nz; ++k) {
                        double z = (g.x3(k) + g.h) / g.h * kPi * m;
                        double prof;
                        if (sine)
                            // exact zeros at the boundary nodes, where
                            // sin(m*pi) would only be zero up to roundoff
                            prof = (k == 0 || k == g.nz - 1) ? 0.0 : std::sin(z);
                        else
                            prof = std::cos(z);
                        f(i, j, k) += mfac * hf(i, j) * prof;
                    }
        }
        return f;
    };

    for (int n = 0; n < opt.n_modes; ++n) {
        NoiseMode mode;
        for (auto& f : mode.phi) f = ScalarField(g);
        for (auto& f : mode.psi) f = ScalarField(g);
        for (auto& f : mode.gamma) f = ScalarField(g);

        for (int c = 0; c < 2; ++c) {
            HorizontalField hf = synth_horizontal(rng);
            hf *= norm;
            if (opt.phi_h_x3_independent) {
                mode.phi[c] = lift(hf);
            } else {
                ScalarField v = synth_vertical(rng, /*sine=*/false);
                v *= norm;
                mode.phi[c] = v;
            }
            HorizontalField hp = synth_horizontal(rng);
            hp *= norm;
            mode.psi[c] = lift(hp);
        }
        {
            ScalarField p3 = synth_vertical(rng, opt.phi3_vanishes_on_boundary);
            p3 *= norm;
            mode.phi[2] = p3;
            ScalarField q3 = synth_vertical(rng, opt.psi3_vanishes_on_boundary);
            q3 *= norm;
            mode.psi[2] = q3;
        }
        modes.push_back(std::move(mode));
    }

    NoiseBasis basis(g, std::move(modes), opt.phi_h_x3_independent,
                     opt.phi3_vanishes_on_boundary, opt.psi3_vanishes_on_boundary);

    if (opt.gamma_mode == KraichnanOptions::GammaGradPhi) {
        // gamma_n^{l,m} = d_l phi_n^m, the Stratonovich choice.
        std::vector<NoiseMode> gm;
        for (int n = 0; n < basis.n_modes(); ++n) {
            NoiseMode mode = basis.mode(n);
            for (int l = 0; l < 2; ++l)
                for (int m = 0; m < 2; ++m)
                    mode.gamma[l * 2 + m] = deriv_h(mode.phi[m], l + 1);
            gm.push_back(std::move(mode));
        }
        basis = NoiseBasis(g, std::move(gm), opt.phi_h_x3_independent,
                           opt.phi3_vanishes_on_boundary, opt.psi3_vanishes_on_boundary);
    }
    return basis;
}

NoiseBasis make_constant_basis(const Grid& g, const std::array<double, 3>& phi,
                               const std::array<double, 3>& psi, int n_modes) {
    std::vector<NoiseMode> modes;
    for (int n = 0; n < n_modes; ++n) {
        NoiseMode m;
        for (int c = 0; c < 3; ++c) {
            m.phi[c] = ScalarField(g, phi[c]);
            m.psi[c] = ScalarField(g, psi[c]);
        }
        for (auto& f : m.gamma) f = ScalarField(g);
        modes.push_back(std::move(m));
    }
    return NoiseBasis(g, std::move(modes), true, phi[2] == 0.0, psi[2] == 0.0);
}

double sym3_max_eigenvalue(double a11, double a12, double a13, double a22,
                           double a23, double a33) {
    // Trigonometric solve for the symmetric 3x3 eigenproblem (Smith's method).
    double p1 = a12 * a12 + a13 * a13 + a23 * a23;
    double q = (a11 + a22 + a33) / 3.0;
    if (p1 == 0.0) return std::max({a11, a22, a33});
    double b11 = a11 - q, b22 = a22 - q, b33 = a33 - q;
    double p2 = b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * p1;
    double p = std::sqrt(p2 / 6.0);
    // det(B)/2 with B = (A - qI)/p
    double ip = 1.0 / p;
    double c11 = b11 * ip, c12 = a12 * ip, c13 = a13 * ip;
    double c22 = b22 * ip, c23 = a23 * ip, c33 = b33 * ip;
    double detb = c11 * (c22 * c33 - c23 * c23) - c12 * (c12 * c33 - c23 * c13) +
                  c13 * (c12 * c23 - c22 * c13);
    double r = detb / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    return q + 2.0 * p * std::cos(phi);
}

AssumptionReport check_assumptions(const NoiseBasis& basis, double delta) {
    const Grid& g = basis.grid();
    AssumptionReport rep;
    rep.delta = delta;
    rep.phi_h_x3_independent = basis.phi_h_x3_independent();
    rep.phi3_vanishes_on_boundary = basis.phi3_vanishes_on_boundary();
    rep.psi3_vanishes_on_boundary = basis.psi3_vanishes_on_boundary();

    const int N = basis.n_modes();
    const double q = 3.0 + delta;

    // Gram matrices and l2 envelopes, node by node.
    ScalarField env_phi[3], env_dphi[3][3], env_gamma[4], env_div_psi(g);
    for (auto& f : env_phi) f = ScalarField(g);
    for (auto& row : env_dphi)
        for (auto& f : row) f = ScalarField(g);
    for (auto& f : env_gamma) f = ScalarField(g);

    std::vector<std::array<ScalarField, 9>> dphi(N); // d_k phi^j, index j*3+k
    for (int n = 0; n < N; ++n) {
        const NoiseMode& m = basis.mode(n);
        for (int j = 0; j < 3; ++j) {
            dphi[n][j * 3 + 0] = deriv_h(m.phi[j], 1);
            dphi[n][j * 3 + 1] = deriv_h(m.phi[j], 2);
            dphi[n][j * 3 + 2] = d3(m.phi[j]);
        }
    }

    double nu_phi = 0.0, nu_psi = 0.0, psi_sup = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.nz; ++k) {
                double ap[6] = {0, 0, 0, 0, 0, 0};
                double as[6] = {0, 0, 0, 0, 0, 0};
                double psil2 = 0.0;
                for (int n = 0; n < N; ++n) {
                    const NoiseMode& m = basis.mode(n);
                    double p1 = m.phi[0](i, j, k), p2 = m.phi[1](i, j, k), p3 = m.phi[2](i, j, k);
                    double s1 = m.psi[0](i, j, k), s2 = m.psi[1](i, j, k), s3 = m.psi[2](i, j, k);
                    ap[0] += p1 * p1; ap[1] += p1 * p2; ap[2] += p1 * p3;
                    ap[3] += p2 * p2; ap[4] += p2 * p3; ap[5] += p3 * p3;
                    as[0] += s1 * s1; as[1] += s1 * s2; as[2] += s1 * s3;
                    as[3] += s2 * s2; as[4] += s2 * s3; as[5] += s3 * s3;
                    psil2 += s1 * s1 + s2 * s2 + s3 * s3;
                    env_phi[0](i, j, k) += p1 * p1;
                    env_phi[1](i, j, k) += p2 * p2;
                    env_phi[2](i, j, k) += p3 * p3;
                }
                nu_phi = std::max(nu_phi,
                                  sym3_max_eigenvalue(ap[0], ap[1], ap[2], ap[3], ap[4], ap[5]));
                nu_psi = std::max(nu_psi,
                                  sym3_max_eigenvalue(as[0], as[1], as[2], as[3], as[4], as[5]));
                psi_sup = std::max(psi_sup, psil2);
            }
    rep.nu_phi = nu_phi;
    rep.nu_psi = nu_psi;
    rep.M_psi_sup = std::sqrt(psi_sup);

    for (int n = 0; n < N; ++n) {
        const NoiseMode& m = basis.mode(n);
        ScalarField dpsi = deriv_h(m.psi[0], 1);
        dpsi += deriv_h(m.psi[1], 2);
        dpsi += d3(m.psi[2]);
        for (std::size_t t = 0; t < dpsi.size(); ++t)
            env_div_psi.data()[t] += dpsi.data()[t] * dpsi.data()[t];
        for (int jj = 0; jj < 3; ++jj)
            for (int kk = 0; kk < 3; ++kk) {
                const ScalarField& d = dphi[n][jj * 3 + kk];
                for (std::size_t t = 0; t < d.size(); ++t)
                    env_dphi[jj][kk].data()[t] += d.data()[t] * d.data()[t];
            }
        for (int c = 0; c < 4; ++c)
            for (std::size_t t = 0; t < m.gamma[c].size(); ++t)
                env_gamma[c].data()[t] += m.gamma[c].data()[t] * m.gamma[c].data()[t];
    }

    auto lq_of_env = [&](const ScalarField& sq_env) {
        // sq_env holds the squared l2 envelope; report ||sqrt(env)||_{L^q}.
        ScalarField tmp(g);
        for (std::size_t t = 0; t < sq_env.size(); ++t)
            tmp.data()[t] = std::pow(std::sqrt(sq_env.data()[t]), q);
        return std::pow(integrate(tmp), 1.0 / q);
    };

    for (int c = 0; c < 3; ++c) rep.M_phi = std::max(rep.M_phi, lq_of_env(env_phi[c]));
    for (int jj = 0; jj < 3; ++jj)
        for (int kk = 0; kk < 3; ++kk)
            rep.M_grad_phi = std::max(rep.M_grad_phi, lq_of_env(env_dphi[jj][kk]));
    for (int c = 0; c < 4; ++c) rep.M_gamma = std::max(rep.M_gamma, lq_of_env(env_gamma[c]));
    rep.M_div_psi = lq_of_env(env_div_psi);

    rep.pass_parabolicity = rep.nu_max() < 2.0 - 1e-9;
    return rep;
}

StratCoefficients strat_coefficients(const NoiseBasis& basis) {
    const Grid& g = basis.grid();
    const int N = basis.n_modes();
    StratCoefficients c;
    for (auto& f : c.a_phi) f = ScalarField(g);
    for (auto& f : c.a_psi) f = ScalarField(g);
    for (auto& f : c.b_v) f = ScalarField(g);
    for (auto& f : c.b_theta) f = ScalarField(g);
    c.p_phi_kernel.resize(N);

    // a^{ij} = delta^{ij} + (1/2) sum_n u^i u^j, packed (11,12,13,22,23,33).
    static const int pack[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

    for (int n = 0; n < N; ++n) {
        const NoiseMode& m = basis.mode(n);
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                ScalarField pp = pointwise(m.phi[i], m.phi[j]);
                c.a_phi[pack[i][j]].axpy(0.5, pp);
                ScalarField ss = pointwise(m.psi[i], m.psi[j]);
                c.a_psi[pack[i][j]].axpy(0.5, ss);
            }

        // b_v^j = (1/2) sum_n sum_i (d_i phi_n^j) phi_n^i
        for (int j = 0; j < 3; ++j) {
            ScalarField dj1 = deriv_h(m.phi[j], 1);
            ScalarField dj2 = deriv_h(m.phi[j], 2);
            ScalarField dj3 = d3(m.phi[j]);
            c.b_v[j].axpy(0.5, pointwise(dj1, m.phi[0]));
            c.b_v[j].axpy(0.5, pointwise(dj2, m.phi[1]));
            c.b_v[j].axpy(0.5, pointwise(dj3, m.phi[2]));
        }

        // b_theta^j = -(1/2) sum_n (div psi_n) psi_n^j
        ScalarField div_psi = deriv_h(m.psi[0], 1);
        div_psi += deriv_h(m.psi[1], 2);
        div_psi += d3(m.psi[2]);
        for (int j = 0; j < 3; ++j)
            c.b_theta[j].axpy(-0.5, pointwise(div_psi, m.psi[j]));

        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                c.p_phi_kernel[n][i * 2 + j] = deriv_h(m.phi[i], j + 1);
    }

    for (int d = 0; d < 3; ++d) {
        int idx = pack[d][d];
        for (std::size_t t = 0; t < c.a_phi[idx].size(); ++t) {
            c.a_phi[idx].data()[t] += 1.0;
            c.a_psi[idx].data()[t] += 1.0;
        }
    }
    return c;
}

BrownianDriver::BrownianDriver(std::uint64_t base_seed, int n_modes, double dt)
    : base_seed_(base_seed), n_modes_(n_modes), dt_(dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("BrownianDriver: dt must be positive");
    if (n_modes < 0) throw std::invalid_argument("BrownianDriver: n_modes must be >= 0");
}

std::uint64_t BrownianDriver::mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

std::uint64_t BrownianDriver::trajectory_seed(std::uint64_t base_seed,
                                              std::uint64_t trajectory) {
    return mix64(base_seed ^ (trajectory * 0x9E3779B97F4A7C15ULL));
}

double BrownianDriver::normal_quantile(double p) {
    // Wichura (1988), algorithm AS 241, PPND16.
    double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

std::vector<double> BrownianDriver::increments(std::uint64_t trajectory,
                                               std::uint64_t step) const {
    std::uint64_t s_traj = trajectory_seed(base_seed_, trajectory);
    std::uint64_t s_step = mix64(s_traj ^ (step * 0xD1B54A32D192ED03ULL));
    std::vector<double> out(n_modes_);
    const double root_dt = std::sqrt(dt_);
    for (int m = 0; m < n_modes_; ++m) {
        std::uint64_t s = mix64(s_step ^ ((std::uint64_t(m) + 1) * 0x8CB92BA72F3D8DD7ULL));
        double u = double(s >> 11) * 0x1.0p-53 + 0x1.0p-54;
        out[m] = root_dt * normal_quantile(u);
    }
    return out;
}

} // namespace hydrostat
