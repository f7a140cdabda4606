#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hydrostat/diagnostics.hpp"
#include "hydrostat/noise.hpp"
#include "hydrostat/operators.hpp"

#include <cmath>

using namespace hydrostat;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

ScalarField random_field(const Grid& g, std::uint64_t seed) {
    ScalarField f(g);
    std::uint64_t s = seed;
    for (std::size_t n = 0; n < f.size(); ++n) {
        s += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = BrownianDriver::mix64(s);
        f.data()[n] = BrownianDriver::normal_quantile(double(z >> 11) * 0x1.0p-53 + 0x1.0p-54);
    }
    return f;
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n)
        m = std::max(m, std::fabs(a.data()[n] - b.data()[n]));
    return m;
}

} // namespace

TEST_CASE("grad_h is spectrally exact on resolved modes") {
    Grid g = make_grid(8, 8, 3, 1.0);
    ScalarField f = eval_on_grid([](double x1, double, double) { return std::sin(x1); }, g);
    HVecField gf = grad_h(f);
    ScalarField expect = eval_on_grid([](double x1, double, double) { return std::cos(x1); }, g);
    CHECK(max_abs_diff(gf.x, expect) < 1e-13);
    CHECK(l2_norm(gf.y) < 1e-13);
}

TEST_CASE("d3 truncation: refinement oracle on x3^4, exact on quadratics") {
    double err_prev = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        int nz = pass == 0 ? 9 : 17;
        Grid g = make_grid(4, 4, nz, 1.0);
        ScalarField f =
            eval_on_grid([](double, double, double x3) { return x3 * x3 * x3 * x3; }, g);
        ScalarField d = d3(f);
        double emax = 0.0;
        for (int k = 1; k < nz - 1; ++k) {
            double x3 = g.x3(k);
            emax = std::max(emax, std::fabs(d(0, 0, k) - 4.0 * x3 * x3 * x3));
        }
        if (pass == 0)
            err_prev = emax;
        else
            CHECK(err_prev / emax > 3.5); // order ~2
    }

    Grid g = make_grid(4, 4, 9, 1.0);
    ScalarField q = eval_on_grid([](double, double, double x3) { return x3 * x3; }, g);
    ScalarField dq = d3(q);
    for (int k = 0; k < g.nz; ++k)
        CHECK(dq(1, 1, k) == doctest::Approx(2.0 * g.x3(k)).epsilon(1e-12));
}

TEST_CASE("laplace with Neumann bc against the symbolic oracle") {
    // f = cos(x1) cos(pi (x3+h)/h): Delta f = -(1 + pi^2/h^2) f
    const double h = 1.0;
    double err_prev = 0.0;
    for (int nz : {17, 33}) {
        Grid g = make_grid(16, 16, nz, h);
        ScalarField f = eval_on_grid(
            [&](double x1, double, double x3) {
                return std::cos(x1) * std::cos(kPi * (x3 + h) / h);
            },
            g);
        ScalarField lf = laplace(f, VerticalBC::neumann());
        double lam = 1.0 + kPi * kPi / (h * h);
        ScalarField expect = f;
        expect *= -lam;
        double e = l2_norm(lf - expect) / l2_norm(expect);
        if (nz == 17)
            err_prev = e;
        else
            CHECK(err_prev / e > 3.5);
    }
}

TEST_CASE("laplace rejects Robin bc on vector fields") {
    Grid g = make_grid(4, 4, 5, 1.0);
    HVecField v(g);
    CHECK_THROWS_AS(laplace(v, VerticalBC::robin(1.0)), std::invalid_argument);
}

TEST_CASE("vertical_average") {
    Grid g = make_grid(8, 8, 9, 1.0);

    ScalarField c = eval_on_grid(
        [](double x1, double x2, double) { return std::sin(x1) + std::cos(x2); }, g);
    HorizontalField avg = vertical_average(c);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            CHECK(avg(i, j) == doctest::Approx(c(i, j, 0)).epsilon(1e-14));

    // linear zero-mean profile is averaged to zero exactly
    ScalarField lin = eval_on_grid([](double, double, double x3) { return x3 + 0.5; }, g);
    HorizontalField alin = vertical_average(lin);
    for (std::size_t n = 0; n < alin.size(); ++n) CHECK(std::fabs(alin.data()[n]) < 1e-15);

    // cos(pi (x3+h)/h) integrates to zero, trapezoid error O(dz^2)
    ScalarField cosf = eval_on_grid(
        [&](double, double, double x3) { return std::cos(kPi * (x3 + g.h) / g.h); }, g);
    HorizontalField ac = vertical_average(cosf);
    for (std::size_t n = 0; n < ac.size(); ++n) CHECK(std::fabs(ac.data()[n]) < 1e-2);
}

TEST_CASE("fluctuation splits exactly") {
    Grid g = make_grid(8, 8, 7, 1.0);
    HVecField zero(g);
    CHECK(l2_norm(fluctuation(zero)) == 0.0);

    HVecField flat(g);
    flat.x = eval_on_grid([](double x1, double, double) { return std::cos(x1); }, g);
    CHECK(l2_norm(fluctuation(flat)) < 1e-13);

    // zero-mean input is reproduced (linear profile: trapezoid-exact)
    HVecField vl(g);
    vl.x = eval_on_grid([](double, double, double x3) { return x3 + 0.5; }, g);
    CHECK(max_abs_diff(fluctuation(vl).x, vl.x) < 1e-14);

    // reconstruction v = v_bar + v_tilde is exact for arbitrary fields
    HVecField v(g);
    v.x = random_field(g, 3);
    v.y = random_field(g, 4);
    auto [bx, by] = vertical_average(v);
    HVecField recon = fluctuation(v) + lift(bx, by);
    CHECK(l2_norm(recon - v) / l2_norm(v) < 1e-14);
}

TEST_CASE("w_of_v analytic antiderivative oracle") {
    // v = (sin x1, 0), h = 1: w = -(x3 + 1) cos x1 (vertical part exact, the
    // integrand is x3-independent)
    Grid g = make_grid(16, 16, 9, 1.0);
    HVecField v(g);
    v.x = eval_on_grid([](double x1, double, double) { return std::sin(x1); }, g);
    ScalarField w = w_of_v(v);
    ScalarField expect = eval_on_grid(
        [](double x1, double, double x3) { return -(x3 + 1.0) * std::cos(x1); }, g);
    CHECK(max_abs_diff(w, expect) < 1e-12);

    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) CHECK(w(i, j, 0) == 0.0);

    HVecField df(g);
    df.x = eval_on_grid([](double, double x2, double) { return -std::sin(x2); }, g);
    df.y = eval_on_grid([](double x1, double, double) { return std::sin(x1); }, g);
    CHECK(l2_norm(w_of_v(df)) < 1e-12);

    HVecField z(g);
    CHECK(l2_norm(w_of_v(z)) == 0.0);
}

TEST_CASE("w top trace vanishes for constrained fields") {
    // After projection, div_h(v_bar) = 0 to roundoff and the cumulative
    // trapezoid reproduces exactly h * avg(div_h v), so the top trace sits
    // at roundoff -- well inside the C dz^2 bound of the contract.
    for (int nz : {9, 17}) {
        Grid g = make_grid(16, 16, nz, 1.0);
        HVecField v(g);
        v.x = eval_on_grid(
            [&](double x1, double, double x3) {
                return std::cos(x1) * std::cos(kPi * (x3 + g.h) / g.h);
            },
            g);
        v = hydrostatic_project(v); // enforce the constraint exactly
        HorizontalField top = trace_top(w_of_v(v));
        CHECK(l2_norm(top) < 1e-12 * h1_norm(v));
    }
}

TEST_CASE("helmholtz_h spectral oracle") {
    Grid g = make_grid(16, 16, 3, 1.0);

    // pure gradient input: f = grad(sin x1 + cos x2)
    HorizontalField fx = eval_on_torus([](double x1, double) { return std::cos(x1); }, g);
    HorizontalField fy = eval_on_torus([](double, double x2) { return -std::sin(x2); }, g);
    HelmholtzParts parts = helmholtz_h(fx, fy);
    CHECK(l2_norm(parts.div_free_x) < 1e-12);
    CHECK(l2_norm(parts.div_free_y) < 1e-12);
    CHECK(l2_norm(parts.grad_x - fx) < 1e-12);

    // divergence-free input
    HorizontalField gx = eval_on_torus([](double, double x2) { return -std::sin(x2); }, g);
    HorizontalField gy = eval_on_torus([](double x1, double) { return std::sin(x1); }, g);
    HelmholtzParts p2 = helmholtz_h(gx, gy);
    CHECK(l2_norm(p2.grad_x) < 1e-12);
    CHECK(l2_norm(p2.grad_y) < 1e-12);

    // constants pass through untouched
    HorizontalField cx(g), cy(g);
    for (std::size_t n = 0; n < cx.size(); ++n) {
        cx.data()[n] = 2.0;
        cy.data()[n] = -3.0;
    }
    HelmholtzParts p3 = helmholtz_h(cx, cy);
    CHECK(l2_norm(p3.grad_x) < 1e-14);
    CHECK(l2_norm(p3.div_free_x - cx) < 1e-14);

    // the potential has zero mean
    HorizontalField psi = helmholtz_potential(fx, fy);
    double mean = 0.0;
    for (std::size_t n = 0; n < psi.size(); ++n) mean += psi.data()[n];
    CHECK(std::fabs(mean) / double(psi.size()) < 1e-14);
}

TEST_CASE("hydrostatic projection examples") {
    Grid g = make_grid(16, 16, 5, 1.0);

    // x3-independent gradient field: P f = 0, Q f = f
    HVecField f(g);
    f.x = eval_on_grid([](double x1, double, double) { return std::sin(x1); }, g);
    HVecField pf = hydrostatic_project(f);
    CHECK(l2_norm(pf) / l2_norm(f) < 1e-12);
    auto [qx, qy] = hydrostatic_q(f);
    CHECK(l2_norm(lift(qx, qy) - f) / l2_norm(f) < 1e-12);

    // constants are kept
    HVecField c(g);
    c.x = ScalarField(g, 1.5);
    c.y = ScalarField(g, -2.5);
    HVecField pc = hydrostatic_project(c);
    CHECK(l2_norm(pc - c) < 1e-13);

    // zero-vertical-average fields are untouched (linear profile)
    HVecField zavg(g);
    zavg.x = eval_on_grid(
        [](double x1, double, double x3) { return (x3 + 0.5) * std::cos(x1); }, g);
    HVecField pz = hydrostatic_project(zavg);
    CHECK(l2_norm(pz - zavg) / l2_norm(zavg) < 1e-12);
}

TEST_CASE("projection invariants on random fields") {
    Grid g = make_grid(16, 16, 9, 1.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        HVecField f(g);
        f.x = random_field(g, seed * 2);
        f.y = random_field(g, seed * 2 + 1);
        HVecField pf = hydrostatic_project(f);
        HVecField ppf = hydrostatic_project(pf);

        CHECK(l2_norm(ppf - pf) / l2_norm(f) < 1e-12);    // idempotent
        CHECK(l2_norm(pf) <= l2_norm(f) * (1.0 + 1e-12)); // contraction
        auto [qx, qy] = hydrostatic_q(f);
        HVecField qlift = lift(qx, qy);
        CHECK(std::fabs(inner(pf, qlift)) / (l2_norm(f) * l2_norm(f)) < 1e-10);
        CHECK(l2_norm(pf + qlift - f) / l2_norm(f) < 1e-13); // exact split

        auto [bx, by] = vertical_average(pf);
        CHECK(l2_norm(div_h(bx, by)) < 1e-10 * h1_norm(f)); // constraint

        // d3 P f = d3 f
        CHECK(l2_norm(d3(pf) - d3(f)) / l2_norm(d3(f)) < 1e-12);
        // d_i P f = P d_i f
        HVecField df(g);
        df.x = deriv_h(f.x, 2);
        df.y = deriv_h(f.y, 2);
        HVecField lhs = hydrostatic_project(df);
        HVecField rhs(g);
        rhs.x = deriv_h(pf.x, 2);
        rhs.y = deriv_h(pf.y, 2);
        CHECK(l2_norm(lhs - rhs) / l2_norm(df) < 1e-10);
    }
}

TEST_CASE("traces") {
    Grid g = make_grid(8, 8, 5, 1.0);
    ScalarField f = eval_on_grid([](double, double, double x3) { return x3; }, g);
    HorizontalField top = trace_top(f), bot = trace_bottom(f);
    for (std::size_t n = 0; n < top.size(); ++n) {
        CHECK(top.data()[n] == 0.0);
        CHECK(bot.data()[n] == -1.0);
    }
    ScalarField c(g, 4.25);
    CHECK(trace_top(c)(2, 3) == 4.25);
    CHECK(trace_bottom(c)(2, 3) == 4.25);

    ScalarField v = eval_on_grid(
        [&](double x1, double, double x3) { return std::cos(x1) * (x3 + g.h); }, g);
    HorizontalField vb = trace_bottom(v);
    for (std::size_t n = 0; n < vb.size(); ++n) CHECK(vb.data()[n] == 0.0);
}

TEST_CASE("dealiasing removes modes outside the 2/3 ball") {
    Grid g = make_grid(8, 8, 3, 1.0);
    // mode k1 = 3 is outside nx/3 = 2
    ScalarField f = eval_on_grid([](double x1, double, double) { return std::cos(3.0 * x1); }, g);
    ScalarField f2 = f;
    dealias(f2);
    CHECK(l2_norm(f2) < 1e-13);
    // mode k1 = 2 is kept
    ScalarField k2 = eval_on_grid([](double x1, double, double) { return std::cos(2.0 * x1); }, g);
    ScalarField k2d = k2;
    dealias(k2d);
    CHECK(l2_norm(k2d - k2) / l2_norm(k2) < 1e-13);
}

TEST_CASE("Kadlec formula: Neumann exact Fourier-cosine field") {
    Grid g = make_grid(32, 32, 33, 1.0);
    ScalarField f = eval_on_grid(
        [](double x1, double x2, double) { return std::cos(2.0 * x1) * std::cos(x2); }, g);
    CHECK(kadlec_residual(f, 0.0) < 1e-6);
}

TEST_CASE("Kadlec formula: Robin field converges at order two") {
    // profile cos(a (x3+h)) with a tan(a h) = beta
    const double h = 1.0, beta = 1.0;
    double a_lo = 1e-6, a_hi = kPi / 2.0 - 1e-6;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (a_lo + a_hi);
        (mid * std::tan(mid * h) > beta ? a_hi : a_lo) = mid;
    }
    const double a = 0.5 * (a_lo + a_hi);

    std::vector<double> res;
    for (int nz : {17, 33}) {
        Grid g = make_grid(16, 16, nz, h);
        ScalarField f = eval_on_grid(
            [&](double x1, double, double x3) {
                return std::cos(x1) * std::cos(a * (x3 + h));
            },
            g);
        res.push_back(kadlec_residual(f, beta));
    }
    double order = std::log2(res[0] / res[1]);
    CHECK(order >= 1.9);
}

TEST_CASE("staggered vertical energy pairs exactly with the FD Laplacian") {
    // <f, d33_bc f>_w = -staggered_energy(f) - alpha ||f(.,0)||^2 exactly
    Grid g = make_grid(8, 8, 9, 1.0);
    ScalarField f = random_field(g, 77);
    for (double alpha : {0.0, 1.7}) {
        VerticalBC bc = alpha == 0.0 ? VerticalBC::neumann() : VerticalBC::robin(alpha);
        double lhs = inner(f, d33_bc(f, bc));
        HorizontalField top = trace_top(f);
        HorizontalField sq(g);
        for (std::size_t n = 0; n < sq.size(); ++n)
            sq.data()[n] = top.data()[n] * top.data()[n];
        double rhs = -staggered_d3_energy(f) - alpha * integrate(sq);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("grad_h energy matches the spectral pairing") {
    Grid g = make_grid(16, 16, 5, 1.0);
    ScalarField f = random_field(g, 5);
    // -<f, Delta_H f> = grad_h_energy(f) exactly, for arbitrary fields
    ScalarField lapH = laplace(f, VerticalBC::neumann()) - d33_bc(f, VerticalBC::neumann());
    double lhs = -inner(f, lapH);
    CHECK(lhs == doctest::Approx(grad_h_energy(f)).epsilon(1e-11));

    // and equals the quadrature of |grad_h f|^2 once f is dealiased
    ScalarField fd = f;
    dealias(fd);
    HVecField gf = grad_h(fd);
    double quad = inner(gf.x, gf.x) + inner(gf.y, gf.y);
    CHECK(grad_h_energy(fd) == doctest::Approx(quad).epsilon(1e-11));
}
