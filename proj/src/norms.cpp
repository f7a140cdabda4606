#include "hydrostat/domain.hpp"
#include "hydrostat/operators.hpp"

#include <cmath>

namespace hydrostat {

namespace {

double quad_sq(const ScalarField& f) { return inner(f, f); }

double quad_sq(const HorizontalField& f) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) sum += f.data()[n] * f.data()[n];
    return sum * g.dx() * g.dy();
}

// Vertical second derivative with one-sided second-order boundary rows;
// norm-grade stencil, no boundary-condition assumption.
ScalarField d33_free(const ScalarField& f) {
    const Grid& g = f.grid();
    const int nz = g.nz;
    const double idz2 = 1.0 / (g.dz() * g.dz());
    ScalarField out(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            if (nz >= 4) {
                out(i, j, 0) = (2.0 * f(i, j, 0) - 5.0 * f(i, j, 1) + 4.0 * f(i, j, 2) -
                                f(i, j, 3)) * idz2;
                out(i, j, nz - 1) = (2.0 * f(i, j, nz - 1) - 5.0 * f(i, j, nz - 2) +
                                     4.0 * f(i, j, nz - 3) - f(i, j, nz - 4)) * idz2;
            } else {
                double c = (f(i, j, 0) - 2.0 * f(i, j, 1) + f(i, j, 2)) * idz2;
                out(i, j, 0) = c;
                out(i, j, nz - 1) = c;
            }
            for (int k = 1; k < nz - 1; ++k)
                out(i, j, k) = (f(i, j, k + 1) - 2.0 * f(i, j, k) + f(i, j, k - 1)) * idz2;
        }
    return out;
}

double h2_seminorm_sq(const ScalarField& f) {
    ScalarField d1 = deriv_h(f, 1);
    ScalarField d2 = deriv_h(f, 2);
    double s = quad_sq(deriv_h(d1, 1)) + quad_sq(deriv_h(d2, 2)) +
               2.0 * quad_sq(deriv_h(d1, 2));
    s += 2.0 * quad_sq(d3(d1)) + 2.0 * quad_sq(d3(d2));
    s += quad_sq(d33_free(f));
    return s;
}

} // namespace

double l2_norm(const ScalarField& f) { return std::sqrt(quad_sq(f)); }

double l2_norm(const HVecField& f) { return std::sqrt(quad_sq(f.x) + quad_sq(f.y)); }

double l2_norm(const HorizontalField& f) { return std::sqrt(quad_sq(f)); }

double l4_norm(const ScalarField& f) {
    ScalarField sq = pointwise(f, f);
    return std::pow(inner(sq, sq), 0.25);
}

double l4_norm(const HVecField& f) {
    const Grid& g = f.grid();
    ScalarField p4(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.nz; ++k) {
                double m = f.x(i, j, k) * f.x(i, j, k) + f.y(i, j, k) * f.y(i, j, k);
                p4(i, j, k) = m * m;
            }
    return std::pow(integrate(p4), 0.25);
}

double h1_norm(const ScalarField& f) {
    double s = quad_sq(f);
    s += quad_sq(deriv_h(f, 1)) + quad_sq(deriv_h(f, 2)) + quad_sq(d3(f));
    return std::sqrt(s);
}

double h1_norm(const HVecField& f) {
    double a = h1_norm(f.x), b = h1_norm(f.y);
    return std::sqrt(a * a + b * b);
}

double hk_norm(const ScalarField& f, int k) {
    if (k < 0 || k > 2) throw std::invalid_argument("hk_norm: only k <= 2 is provided");
    if (k == 0) return l2_norm(f);
    if (k == 1) return h1_norm(f);
    double h1 = h1_norm(f);
    return std::sqrt(h1 * h1 + h2_seminorm_sq(f));
}

double hk_norm(const HVecField& f, int k) {
    double a = hk_norm(f.x, k), b = hk_norm(f.y, k);
    return std::sqrt(a * a + b * b);
}

double h1_norm(const HorizontalField& f) {
    auto [d1, d2] = grad_h(f);
    return std::sqrt(quad_sq(f) + quad_sq(d1) + quad_sq(d2));
}

double hk_norm(const HorizontalField& f, int k) {
    if (k < 0 || k > 2) throw std::invalid_argument("hk_norm: only k <= 2 is provided");
    if (k == 0) return l2_norm(f);
    auto [d1, d2] = grad_h(f);
    double s = quad_sq(f) + quad_sq(d1) + quad_sq(d2);
    if (k == 2) {
        auto [d11, d12] = grad_h(d1);
        auto [d21, d22] = grad_h(d2);
        s += quad_sq(d11) + quad_sq(d12) + quad_sq(d21) + quad_sq(d22);
    }
    return std::sqrt(s);
}

} // namespace hydrostat
