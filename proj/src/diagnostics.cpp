#include "hydrostat/diagnostics.hpp"

#include "hydrostat/physics.hpp"

#include <cmath>

namespace hydrostat {

void NormTracker::update(const HVecField& v, const ScalarField& theta, double t) {
    double dt_since = started ? t - last_t : 0.0;
    double v_l2 = l2_norm(v), v_h1 = h1_norm(v), v_h2 = hk_norm(v, 2);
    double t_l2 = l2_norm(theta), t_h1 = h1_norm(theta), t_h2 = hk_norm(theta, 2);
    n0_v.update(v_l2 * v_l2, v_h1 * v_h1, dt_since);
    n1_v.update(v_h1 * v_h1, v_h2 * v_h2, dt_since);
    n0_theta.update(t_l2 * t_l2, t_h1 * t_h1, dt_since);
    n1_theta.update(t_h1 * t_h1, t_h2 * t_h2, dt_since);
    last_t = t;
    started = true;
}

void NormTracker::fill(DiagnosticsRecord& rec) const {
    rec.N0_v = n0_v.value();
    rec.N1_v = n1_v.value();
    rec.N0_theta = n0_theta.value();
    rec.N1_theta = n1_theta.value();
}

std::pair<double, double> xy_functionals(const HVecField& v) {
    auto [bx, by] = vertical_average(v);
    HVecField vt = fluctuation(v);
    HVecField dzv = d3(v);

    double x = h1_norm(bx) * h1_norm(bx) + h1_norm(by) * h1_norm(by);
    x += l2_norm(dzv) * l2_norm(dzv);
    double l4 = l4_norm(vt);
    x += l4 * l4 * l4 * l4;

    double y = hk_norm(bx, 2) * hk_norm(bx, 2) + hk_norm(by, 2) * hk_norm(by, 2);
    HVecField g1 = grad_h(dzv.x), g2 = grad_h(dzv.y);
    ScalarField dz2 = d3(dzv.x), dz2y = d3(dzv.y);
    y += inner(g1.x, g1.x) + inner(g1.y, g1.y) + inner(g2.x, g2.x) + inner(g2.y, g2.y);
    y += inner(dz2, dz2) + inner(dz2y, dz2y);

    // || |v_tilde| |grad v_tilde| ||^2 pointwise
    HVecField gx = grad_h(vt.x), gy = grad_h(vt.y);
    ScalarField dzx = d3(vt.x), dzy = d3(vt.y);
    const Grid& g = v.grid();
    ScalarField integrand(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.nz; ++k) {
                double vsq = vt.x(i, j, k) * vt.x(i, j, k) + vt.y(i, j, k) * vt.y(i, j, k);
                double gsq = gx.x(i, j, k) * gx.x(i, j, k) + gx.y(i, j, k) * gx.y(i, j, k) +
                             gy.x(i, j, k) * gy.x(i, j, k) + gy.y(i, j, k) * gy.y(i, j, k) +
                             dzx(i, j, k) * dzx(i, j, k) + dzy(i, j, k) * dzy(i, j, k);
                integrand(i, j, k) = vsq * gsq;
            }
    y += integrate(integrand);
    return {x, y};
}

double robin_energy(const ScalarField& theta, double alpha) {
    double e = grad_h_energy(theta) + staggered_d3_energy(theta);
    if (alpha != 0.0) {
        HorizontalField top = trace_top(theta);
        HorizontalField sq(theta.grid());
        for (std::size_t n = 0; n < sq.size(); ++n)
            sq.data()[n] = top.data()[n] * top.data()[n];
        e += alpha * integrate(sq);
    }
    return e;
}

std::optional<BlowupFlag> BlowupMonitor::check(const DiagnosticsRecord& rec) const {
    double f = rec.blowup_functional();
    if (!std::isfinite(f) || !std::isfinite(rec.N1_theta)) {
        return BlowupFlag{rec.t, f, "numerical (non-finite state)"};
    }
    if (f > threshold) return BlowupFlag{rec.t, f, "numerical"};
    return std::nullopt;
}

std::map<std::string, double> identity_residuals(const HVecField& v, const ScalarField& theta) {
    std::map<std::string, double> out;

    // projection idempotency on the given v
    HVecField pv = hydrostatic_project(v);
    HVecField ppv = hydrostatic_project(pv);
    double vn = l2_norm(v);
    out["projection_idempotency"] =
        vn > 0.0 ? l2_norm(ppv - pv) / vn : l2_norm(ppv - pv);

    out["cancellation_v"] = cancellation_residual_v(v);
    out["cancellation_theta"] = cancellation_residual_theta(v, theta);

    // weak/strong pairing gap against a fixed independent test function
    // (pairing theta against itself is the cancellation integral and sits at
    // roundoff, which would make the ratio meaningless)
    const Grid& g = theta.grid();
    ScalarField phi = eval_on_grid(
        [&](double x1, double x2, double x3) {
            return std::sin(2.0 * x1 + 0.9) * (1.0 + 0.3 * (x3 + 0.2 * g.h)) +
                   std::cos(x2 + 0.4) * std::cos(x1);
        },
        g);
    ScalarField strong_field = nonlinear_theta(v, theta);
    double strong = inner(strong_field, phi);
    double weak = weak_form_pairing(v, theta, phi);
    double scale = l2_norm(strong_field) * l2_norm(phi);
    out["weak_strong_pairing"] =
        scale > 0.0 ? std::fabs(strong - weak) / scale : std::fabs(strong - weak);
    return out;
}

double kadlec_residual(const ScalarField& f, double beta) {
    const VerticalBC bc = beta == 0.0 ? VerticalBC::neumann() : VerticalBC::robin(beta);

    ScalarField d1 = deriv_h(f, 1);
    ScalarField d2 = deriv_h(f, 2);
    ScalarField d11 = deriv_h(d1, 1);
    ScalarField d12 = deriv_h(d1, 2);
    ScalarField d22 = deriv_h(d2, 2);
    ScalarField d13 = d3(d1);
    ScalarField d23 = d3(d2);
    ScalarField d33 = d33_bc(f, bc);

    double sum2 = inner(d11, d11) + inner(d22, d22) + inner(d33, d33) +
                  2.0 * inner(d12, d12) + 2.0 * inner(d13, d13) + 2.0 * inner(d23, d23);

    ScalarField lap = laplace(f, bc);
    double lap2 = inner(lap, lap);

    double trace_term = 0.0;
    if (beta != 0.0) {
        HorizontalField top1 = trace_top(d1);
        HorizontalField top2 = trace_top(d2);
        HorizontalField sq(f.grid());
        for (std::size_t n = 0; n < sq.size(); ++n)
            sq.data()[n] = top1.data()[n] * top1.data()[n] + top2.data()[n] * top2.data()[n];
        trace_term = 2.0 * beta * integrate(sq);
    }

    double resid = std::fabs(sum2 - lap2 + trace_term);
    double scale = std::max(sum2, lap2);
    return scale > 0.0 ? resid / scale : resid;
}

Kadlec2Forms kadlec2_forms(const ScalarField& f, const std::array<ScalarField, 6>& a,
                           double beta) {
    const VerticalBC bc = beta == 0.0 ? VerticalBC::neumann() : VerticalBC::robin(beta);
    // full 3x3 Hessian stack, same discrete family as kadlec_residual
    ScalarField d1 = deriv_h(f, 1);
    ScalarField d2 = deriv_h(f, 2);
    std::array<std::array<const ScalarField*, 3>, 3> hess{};
    ScalarField d11 = deriv_h(d1, 1), d12 = deriv_h(d1, 2), d22 = deriv_h(d2, 2);
    ScalarField d13 = d3(d1), d23 = d3(d2);
    ScalarField d33 = d33_bc(f, bc);
    hess[0] = {&d11, &d12, &d13};
    hess[1] = {&d12, &d22, &d23};
    hess[2] = {&d13, &d23, &d33};

    static const int pack[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    Kadlec2Forms out;
    ScalarField lap = d11 + d22 + d33;
    ScalarField acc_lhs(f.grid()), acc_rhs(f.grid());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const ScalarField& aij = a[pack[i][j]];
            for (int k = 0; k < 3; ++k)
                acc_lhs += pointwise(aij, pointwise(*hess[i][k], *hess[j][k]));
            acc_rhs += pointwise(aij, pointwise(*hess[i][j], lap));
        }
    out.lhs = integrate(acc_lhs);
    out.rhs1 = integrate(acc_rhs);
    out.l2 = inner(f, f);
    return out;
}

double cancellation_residual_v(const HVecField& v) {
    HVecField n = nonlinear_v(v);
    double num = std::fabs(inner(n, v));
    double den = l2_norm(n) * l2_norm(v);
    return den > 0.0 ? num / den : num;
}

double cancellation_residual_theta(const HVecField& v, const ScalarField& theta) {
    ScalarField n = nonlinear_theta(v, theta);
    double num = std::fabs(inner(n, theta));
    double den = l2_norm(n) * l2_norm(theta);
    return den > 0.0 ? num / den : num;
}

} // namespace hydrostat
