#include "hydrostat/physics.hpp"

#include <cmath>
#include <limits>

namespace hydrostat {

ForcingSpec ForcingSpec::coriolis(double k0) {
    ForcingSpec f;
    f.kind = Coriolis;
    f.k0 = k0;
    return f;
}

ForcingSpec ForcingSpec::linear_damping(double c) {
    ForcingSpec f;
    f.kind = LinearDamping;
    f.c = c;
    return f;
}

ForcingSpec ForcingSpec::tabulated(HVecField fv, ScalarField ftheta) {
    ForcingSpec f;
    f.kind = Tabulated;
    f.f_v_table = std::move(fv);
    f.f_theta_table = std::move(ftheta);
    return f;
}

HVecField ForcingSpec::f_v(const HVecField& v, const ScalarField& theta) const {
    (void)theta;
    switch (kind) {
        case Zero:
            return HVecField(v.grid());
        case Coriolis: {
            HVecField out(v.grid());
            out.x = v.y;
            out.x *= k0;
            out.y = v.x;
            out.y *= -k0;
            return out;
        }
        case LinearDamping: {
            HVecField out = v;
            out *= -c;
            return out;
        }
        case Tabulated:
            return *f_v_table;
    }
    return HVecField(v.grid());
}

HVecField ForcingSpec::f_v(const HVecField& v, const ScalarField& theta,
                           const HVecField& grad_theta_h) const {
    (void)grad_theta_h;
    return f_v(v, theta);
}

ScalarField ForcingSpec::f_theta(const HVecField& v, const ScalarField& theta) const {
    (void)v;
    switch (kind) {
        case Zero:
        case Coriolis:
            return ScalarField(theta.grid());
        case LinearDamping: {
            ScalarField out = theta;
            out *= -c;
            return out;
        }
        case Tabulated:
            return *f_theta_table;
    }
    return ScalarField(theta.grid());
}

double ForcingSpec::growth_audit(const HVecField& v, const ScalarField& theta) const {
    double num = l2_norm(f_v(v, theta));
    double xi = xi_budget ? l2_norm(*xi_budget) : 0.0;
    HVecField gx = grad_h(v.x), gy = grad_h(v.y);
    double grad = std::sqrt(l2_norm(gx) * l2_norm(gx) + l2_norm(gy) * l2_norm(gy) +
                            l2_norm(d3(v)) * l2_norm(d3(v)));
    double den = xi + l2_norm(v) + l2_norm(theta) + grad;
    return den > 0.0 ? num / den : 0.0;
}

CoefficientSet identity_coefficients(const Grid& g, double alpha, double kappa_const) {
    CoefficientSet c;
    static const bool diag[6] = {true, false, false, true, false, true};
    for (int t = 0; t < 6; ++t) {
        c.a_v[t] = ScalarField(g, diag[t] ? 1.0 : 0.0);
        c.a_theta[t] = ScalarField(g, diag[t] ? 1.0 : 0.0);
    }
    for (auto& f : c.b_v) f = ScalarField(g);
    for (auto& f : c.b_theta) f = ScalarField(g);
    c.alpha = alpha;
    c.kappa = ScalarField(g, kappa_const);
    c.a_v_identity = true;
    c.a_theta_identity = true;
    c.ellipticity_margin_v = 1.0;
    c.ellipticity_margin_theta = 1.0;
    return c;
}

namespace {

// Smallest eigenvalue of the packed symmetric matrix a - (1/2) sum u u^T over
// all nodes: the operative stochastic-ellipticity constant.
double ellipticity_margin(const std::array<ScalarField, 6>& a, const NoiseBasis& basis,
                          bool use_psi) {
    const Grid& g = a[0].grid();
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.nz; ++k) {
                double m[6];
                for (int t = 0; t < 6; ++t) m[t] = a[t](i, j, k);
                for (int n = 0; n < basis.n_modes(); ++n) {
                    const auto& u = use_psi ? basis.mode(n).psi : basis.mode(n).phi;
                    double u1 = u[0](i, j, k), u2 = u[1](i, j, k), u3 = u[2](i, j, k);
                    m[0] -= 0.5 * u1 * u1;
                    m[1] -= 0.5 * u1 * u2;
                    m[2] -= 0.5 * u1 * u3;
                    m[3] -= 0.5 * u2 * u2;
                    m[4] -= 0.5 * u2 * u3;
                    m[5] -= 0.5 * u3 * u3;
                }
                // min eigenvalue = -max eigenvalue of the negated matrix
                double lam =
                    -sym3_max_eigenvalue(-m[0], -m[1], -m[2], -m[3], -m[4], -m[5]);
                margin = std::min(margin, lam);
            }
    return margin;
}

bool boundary_vanishes(const ScalarField& f, double tol = 0.0) {
    const Grid& g = f.grid();
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            if (std::fabs(f(i, j, 0)) > tol || std::fabs(f(i, j, g.nz - 1)) > tol)
                return false;
    return true;
}

} // namespace

CoefficientSet make_coefficient_set(std::array<ScalarField, 6> a_v,
                                    std::array<ScalarField, 6> a_theta,
                                    std::array<ScalarField, 3> b_v,
                                    std::array<ScalarField, 3> b_theta, double alpha,
                                    ScalarField kappa, const NoiseBasis& basis) {
    CoefficientSet c;
    c.a_v = std::move(a_v);
    c.a_theta = std::move(a_theta);
    c.b_v = std::move(b_v);
    c.b_theta = std::move(b_theta);
    c.alpha = alpha;
    c.kappa = std::move(kappa);

    // a_theta^{31} and a_theta^{32} must vanish on both boundaries; packed
    // indices 2 and 4.
    if (!boundary_vanishes(c.a_theta[2]) || !boundary_vanishes(c.a_theta[4]))
        throw std::invalid_argument(
            "make_coefficient_set: a_theta^{3j} must vanish at x3 = 0 and x3 = -h");

    c.ellipticity_margin_v = ellipticity_margin(c.a_v, basis, false);
    c.ellipticity_margin_theta = ellipticity_margin(c.a_theta, basis, true);
    if (c.ellipticity_margin_v <= 0.0 || c.ellipticity_margin_theta <= 0.0)
        throw std::invalid_argument(
            "make_coefficient_set: ellipticity margin a - (1/2) sum u u^T is not positive "
            "(margin_v=" + std::to_string(c.ellipticity_margin_v) +
            ", margin_theta=" + std::to_string(c.ellipticity_margin_theta) + ")");
    return c;
}

CoefficientSet strat_derived_coefficients(const StratCoefficients& sc,
                                          const NoiseBasis& basis, double alpha,
                                          double kappa_const) {
    return make_coefficient_set(sc.a_phi, sc.a_psi, sc.b_v, sc.b_theta, alpha,
                                ScalarField(basis.grid(), kappa_const), basis);
}

HVecField nonlinear_v(const HVecField& v) {
    const Grid& g = v.grid();
    ScalarField w = w_of_v(v);
    HVecField dzv = d3(v);
    HVecField out(g);
    for (int c = 0; c < 2; ++c) {
        const ScalarField& vc = c == 0 ? v.x : v.y;
        ScalarField& oc = c == 0 ? out.x : out.y;
        const ScalarField& dzc = c == 0 ? dzv.x : dzv.y;
        oc = dealiased_product(v.x, deriv_h(vc, 1));
        oc += dealiased_product(v.y, deriv_h(vc, 2));
        oc += dealiased_product(w, dzc);
    }
    return out;
}

ScalarField nonlinear_theta(const HVecField& v, const ScalarField& theta) {
    ScalarField w = w_of_v(v);
    ScalarField out = dealiased_product(v.x, deriv_h(theta, 1));
    out += dealiased_product(v.y, deriv_h(theta, 2));
    out += dealiased_product(w, d3(theta));
    return out;
}

double weak_form_pairing(const HVecField& v, const ScalarField& theta,
                         const ScalarField& phi_test) {
    ScalarField w = w_of_v(v);
    ScalarField acc = pointwise(theta, pointwise(v.x, deriv_h(phi_test, 1)));
    acc += pointwise(theta, pointwise(v.y, deriv_h(phi_test, 2)));
    acc += pointwise(theta, pointwise(w, d3(phi_test)));
    return -integrate(acc);
}

HVecField j_kappa(const ScalarField& theta, const ScalarField& kappa) {
    const Grid& g = theta.grid();
    ScalarField kt = pointwise(kappa, theta);
    // cumulative trapezoid from the bottom
    ScalarField cum(g);
    const double half_dz = 0.5 * g.dz();
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            cum(i, j, 0) = 0.0;
            for (int k = 1; k < g.nz; ++k)
                cum(i, j, k) = cum(i, j, k - 1) + half_dz * (kt(i, j, k - 1) + kt(i, j, k));
        }
    return grad_h(cum);
}

ScalarField transport(const std::array<ScalarField, 3>& coeff, const ScalarField& f) {
    ScalarField out = pointwise(coeff[0], deriv_h(f, 1));
    out += pointwise(coeff[1], deriv_h(f, 2));
    out += pointwise(coeff[2], d3(f));
    return out;
}

HVecField transport(const std::array<ScalarField, 3>& coeff, const HVecField& f) {
    HVecField out(f.grid());
    out.x = transport(coeff, f.x);
    out.y = transport(coeff, f.y);
    return out;
}

namespace {

HVecField p_gamma_impl(const HVecField* v, const NoiseBasis& basis, const GForcing* gf) {
    const Grid& g = basis.grid();
    HVecField out(g);
    for (int n = 0; n < basis.n_modes(); ++n) {
        const NoiseMode& m = basis.mode(n);
        HVecField gn(g);
        if (v) gn = transport(m.phi, *v);
        if (gf && n < int(gf->g_v.size())) gn += gf->g_v[n];
        auto [qx, qy] = hydrostatic_q(gn); // this is grad_H Ptilde_n
        ScalarField qx3 = lift(qx), qy3 = lift(qy);
        out.x += pointwise(m.gamma[0], qx3);
        out.x += pointwise(m.gamma[1], qy3);
        out.y += pointwise(m.gamma[2], qx3);
        out.y += pointwise(m.gamma[3], qy3);
    }
    return out;
}

} // namespace

HVecField p_gamma_phi(const HVecField& v, const NoiseBasis& basis) {
    return p_gamma_impl(&v, basis, nullptr);
}

HVecField p_gamma_full(const HVecField& v, const NoiseBasis& basis, const GForcing& gf) {
    return p_gamma_impl(&v, basis, &gf);
}

HVecField p_gamma_G(const GForcing& gf, const NoiseBasis& basis) {
    return p_gamma_impl(nullptr, basis, &gf);
}

HorizontalField p_tilde(const HVecField& v, const NoiseBasis& basis, int n) {
    HVecField gn = transport(basis.mode(n).phi, v);
    auto [bx, by] = vertical_average(gn);
    return helmholtz_potential(bx, by);
}

namespace {

// Non-divergence second-order sum a^{ij} d2_{ij} f with Neumann-type FD
// vertical parts; only the deviation from the identity is assembled here.
ScalarField second_order_deviation(const ScalarField& f, const std::array<ScalarField, 6>& a,
                                   const VerticalBC& bc, bool identity) {
    const Grid& g = f.grid();
    ScalarField out(g);
    if (identity) return out;
    // packed (11,12,13,22,23,33); mixed entries contribute twice
    ScalarField d1 = deriv_h(f, 1);
    ScalarField d2 = deriv_h(f, 2);
    ScalarField d11 = deriv_h(d1, 1);
    ScalarField d12 = deriv_h(d1, 2);
    ScalarField d22 = deriv_h(d2, 2);
    ScalarField d13 = d3(d1);
    ScalarField d23 = d3(d2);
    ScalarField d33 = d33_bc(f, bc);

    auto dev = [&](int t, double unit) {
        ScalarField c = a[t];
        for (std::size_t s = 0; s < c.size(); ++s) c.data()[s] -= unit;
        return c;
    };
    out += pointwise(dev(0, 1.0), d11);
    out += pointwise(dev(3, 1.0), d22);
    out += pointwise(dev(5, 1.0), d33);
    ScalarField two_a12 = dev(1, 0.0);
    two_a12 *= 2.0;
    out += pointwise(two_a12, d12);
    ScalarField two_a13 = dev(2, 0.0);
    two_a13 *= 2.0;
    out += pointwise(two_a13, d13);
    ScalarField two_a23 = dev(4, 0.0);
    two_a23 *= 2.0;
    out += pointwise(two_a23, d23);
    return out;
}

ScalarField drift_term(const ScalarField& f, const std::array<ScalarField, 3>& b) {
    ScalarField out = pointwise(b[0], deriv_h(f, 1));
    out += pointwise(b[1], deriv_h(f, 2));
    out += pointwise(b[2], d3(f));
    return out;
}

bool all_zero(const std::array<ScalarField, 3>& b) {
    for (const auto& f : b)
        for (std::size_t s = 0; s < f.size(); ++s)
            if (f.data()[s] != 0.0) return false;
    return true;
}

} // namespace

HVecField apply_Lv(const HVecField& v, const CoefficientSet& coeffs) {
    HVecField out = laplace(v, VerticalBC::neumann());
    if (!coeffs.a_v_identity) {
        out.x += second_order_deviation(v.x, coeffs.a_v, VerticalBC::neumann(), false);
        out.y += second_order_deviation(v.y, coeffs.a_v, VerticalBC::neumann(), false);
    }
    if (!all_zero(coeffs.b_v)) {
        out.x += drift_term(v.x, coeffs.b_v);
        out.y += drift_term(v.y, coeffs.b_v);
    }
    return out;
}

namespace {

// Divergence-form deviation sum d_i((a - I)^{ij} d_j theta) with the Robin
// flux of the a^{33} deviation carried through d33_flux. The a^{3j} (j<3)
// entries vanish on the boundary by construction, so their vertical
// divergence needs no boundary flux.
ScalarField divform_deviation(const ScalarField& theta, const CoefficientSet& c) {
    const VerticalBC bc = VerticalBC::robin(c.alpha);
    ScalarField d1 = deriv_h(theta, 1);
    ScalarField d2 = deriv_h(theta, 2);
    ScalarField dz = d3(theta);

    auto dev = [&](int t, double unit) {
        ScalarField a = c.a_theta[t];
        for (std::size_t s = 0; s < a.size(); ++s) a.data()[s] -= unit;
        return a;
    };

    // horizontal flux components
    ScalarField fx = pointwise(dev(0, 1.0), d1);
    fx += pointwise(dev(1, 0.0), d2);
    fx += pointwise(dev(2, 0.0), dz);
    ScalarField fy = pointwise(dev(1, 0.0), d1);
    fy += pointwise(dev(3, 1.0), d2);
    fy += pointwise(dev(4, 0.0), dz);

    ScalarField out = deriv_h(fx, 1);
    out += deriv_h(fy, 2);

    // vertical flux from a^{31} d1 + a^{32} d2 (boundary flux zero)
    ScalarField fz = pointwise(dev(2, 0.0), d1);
    fz += pointwise(dev(4, 0.0), d2);
    out += d3(fz);

    // a^{33} deviation in conservative form, Robin flux included
    ScalarField a33dev = dev(5, 1.0);
    out += d33_flux(theta, a33dev, bc);
    return out;
}

} // namespace

ScalarField apply_Ltheta_strong(const ScalarField& theta, const CoefficientSet& coeffs) {
    ScalarField out = laplace(theta, VerticalBC::robin(coeffs.alpha));
    if (!coeffs.a_theta_identity) out += divform_deviation(theta, coeffs);
    if (!all_zero(coeffs.b_theta)) out += drift_term(theta, coeffs.b_theta);
    return out;
}

double apply_Ltheta_weak_residual(const ScalarField& theta, const CoefficientSet& coeffs,
                                  const ScalarField& phi_test) {
    ScalarField d1t = deriv_h(theta, 1), d2t = deriv_h(theta, 2), d3t = d3(theta);
    ScalarField d1p = deriv_h(phi_test, 1), d2p = deriv_h(phi_test, 2), d3p = d3(phi_test);
    const auto& a = coeffs.a_theta;
    // - int sum a^{ij} d_j theta d_i phi
    ScalarField acc = pointwise(a[0], pointwise(d1t, d1p));
    acc += pointwise(a[1], pointwise(d2t, d1p));
    acc += pointwise(a[2], pointwise(d3t, d1p));
    acc += pointwise(a[1], pointwise(d1t, d2p));
    acc += pointwise(a[3], pointwise(d2t, d2p));
    acc += pointwise(a[4], pointwise(d3t, d2p));
    acc += pointwise(a[2], pointwise(d1t, d3p));
    acc += pointwise(a[4], pointwise(d2t, d3p));
    acc += pointwise(a[5], pointwise(d3t, d3p));
    double form = -integrate(acc);

    // + int sum b^j (d_j theta) phi  (consistent with the strong drift sign)
    ScalarField bterm = pointwise(coeffs.b_theta[0], d1t);
    bterm += pointwise(coeffs.b_theta[1], d2t);
    bterm += pointwise(coeffs.b_theta[2], d3t);
    form += integrate(pointwise(bterm, phi_test));

    // Robin boundary term -alpha int a^{33}(.,0) theta(.,0) phi(.,0)
    HorizontalField a33_top = trace_top(coeffs.a_theta[5]);
    HorizontalField tt = trace_top(theta);
    HorizontalField pt = trace_top(phi_test);
    HorizontalField prod(theta.grid());
    for (std::size_t s = 0; s < prod.size(); ++s)
        prod.data()[s] = a33_top.data()[s] * tt.data()[s] * pt.data()[s];
    form -= coeffs.alpha * integrate(prod);
    return form;
}

ScalarField strat_correction_theta(const ScalarField& theta, const StratCoefficients& sc,
                                   const NoiseBasis& basis, double alpha) {
    // div((a_psi - I) grad theta) reusing the divergence-form kernel
    CoefficientSet tmp;
    tmp.a_theta = sc.a_psi;
    tmp.alpha = alpha;
    ScalarField out = divform_deviation(theta, tmp);

    // -(1/2) sum (div psi_n)(psi_n . grad) theta
    for (int n = 0; n < basis.n_modes(); ++n) {
        const NoiseMode& m = basis.mode(n);
        ScalarField div_psi = deriv_h(m.psi[0], 1);
        div_psi += deriv_h(m.psi[1], 2);
        div_psi += d3(m.psi[2]);
        ScalarField tr = transport(m.psi, theta);
        out.axpy(-0.5, pointwise(div_psi, tr));
    }
    return out;
}

HVecField p_phi(const HVecField& v, const StratCoefficients& sc, const NoiseBasis& basis) {
    const Grid& g = basis.grid();
    HVecField out(g);
    for (int n = 0; n < basis.n_modes(); ++n) {
        HVecField gn = transport(basis.mode(n).phi, v);
        auto [qx, qy] = hydrostatic_q(gn);
        ScalarField qx3 = lift(qx), qy3 = lift(qy);
        // (P_phi v)_j = sum_i d_j phi^i (Q[...])^i, kernel index [i*2+j]
        out.x += pointwise(sc.p_phi_kernel[n][0 * 2 + 0], qx3);
        out.x += pointwise(sc.p_phi_kernel[n][1 * 2 + 0], qy3);
        out.y += pointwise(sc.p_phi_kernel[n][0 * 2 + 1], qx3);
        out.y += pointwise(sc.p_phi_kernel[n][1 * 2 + 1], qy3);
    }
    return out;
}

HVecField strat_correction_v(const HVecField& v, const StratCoefficients& sc,
                             const NoiseBasis& basis) {
    if (!basis.phi_h_x3_independent())
        throw std::invalid_argument(
            "strat_correction_v: requires the x3-independence flag on phi_H "
            "(the Stratonovich conversion identity assumes it)");
    // (a_phi - I)^{ij} d2_{ij} v + (1/2) sum (d_i phi^j) phi^i d_j v + P_phi v
    HVecField out(v.grid());
    out.x = second_order_deviation(v.x, sc.a_phi, VerticalBC::neumann(), false);
    out.y = second_order_deviation(v.y, sc.a_phi, VerticalBC::neumann(), false);
    out.x += drift_term(v.x, sc.b_v);
    out.y += drift_term(v.y, sc.b_v);
    out += p_phi(v, sc, basis);
    return out;
}

std::vector<HVecField> stochastic_diffusion_v(const HVecField& v, const NoiseBasis& basis,
                                              const GForcing& gf) {
    std::vector<HVecField> out;
    out.reserve(basis.n_modes());
    for (int n = 0; n < basis.n_modes(); ++n) {
        HVecField gn = transport(basis.mode(n).phi, v);
        if (n < int(gf.g_v.size())) gn += gf.g_v[n];
        out.push_back(hydrostatic_project(gn));
    }
    return out;
}

std::vector<ScalarField> stochastic_diffusion_theta(const ScalarField& theta,
                                                    const NoiseBasis& basis,
                                                    const GForcing& gf) {
    std::vector<ScalarField> out;
    out.reserve(basis.n_modes());
    for (int n = 0; n < basis.n_modes(); ++n) {
        ScalarField gn = transport(basis.mode(n).psi, theta);
        if (n < int(gf.g_theta.size())) gn += gf.g_theta[n];
        out.push_back(std::move(gn));
    }
    return out;
}

} // namespace hydrostat
