#include "hydrostat/domain.hpp"

#include <cmath>
#include <sstream>

namespace hydrostat {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

Grid make_grid(int nx, int ny, int nz, double h) {
    if (!power_of_two(nx) || nx < 4)
        throw std::invalid_argument("make_grid: nx not a power of two >= 4 (got " +
                                    std::to_string(nx) + ")");
    if (!power_of_two(ny) || ny < 4)
        throw std::invalid_argument("make_grid: ny not a power of two >= 4 (got " +
                                    std::to_string(ny) + ")");
    if (nz < 3)
        throw std::invalid_argument("make_grid: nz must be >= 3 (got " +
                                    std::to_string(nz) + ")");
    if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument("make_grid: depth h must be positive and finite");
    Grid g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.h = h;
    return g;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    for (std::size_t n = 0; n < v_.size(); ++n) v_[n] += o.v_[n];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
    for (std::size_t n = 0; n < v_.size(); ++n) v_[n] -= o.v_[n];
    return *this;
}

ScalarField& ScalarField::operator*=(double c) {
    for (auto& x : v_) x *= c;
    return *this;
}

ScalarField& ScalarField::axpy(double c, const ScalarField& o) {
    for (std::size_t n = 0; n < v_.size(); ++n) v_[n] += c * o.v_[n];
    return *this;
}

bool ScalarField::finite() const {
    for (double x : v_)
        if (!std::isfinite(x)) return false;
    return true;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { a += b; return a; }
ScalarField operator-(ScalarField a, const ScalarField& b) { a -= b; return a; }
ScalarField operator*(double c, ScalarField a) { a *= c; return a; }

ScalarField pointwise(const ScalarField& a, const ScalarField& b) {
    ScalarField r(a.grid());
    for (std::size_t n = 0; n < r.size(); ++n) r.data()[n] = a.data()[n] * b.data()[n];
    return r;
}

HVecField operator+(HVecField a, const HVecField& b) { a += b; return a; }
HVecField operator-(HVecField a, const HVecField& b) { a -= b; return a; }
HVecField operator*(double c, HVecField a) { a *= c; return a; }

HorizontalField& HorizontalField::operator+=(const HorizontalField& o) {
    for (std::size_t n = 0; n < v_.size(); ++n) v_[n] += o.v_[n];
    return *this;
}

HorizontalField& HorizontalField::operator-=(const HorizontalField& o) {
    for (std::size_t n = 0; n < v_.size(); ++n) v_[n] -= o.v_[n];
    return *this;
}

HorizontalField& HorizontalField::operator*=(double c) {
    for (auto& x : v_) x *= c;
    return *this;
}

bool HorizontalField::finite() const {
    for (double x : v_)
        if (!std::isfinite(x)) return false;
    return true;
}

HorizontalField operator+(HorizontalField a, const HorizontalField& b) { a += b; return a; }
HorizontalField operator-(HorizontalField a, const HorizontalField& b) { a -= b; return a; }
HorizontalField operator*(double c, HorizontalField a) { a *= c; return a; }

ScalarField eval_on_grid(const std::function<double(double, double, double)>& expr,
                         const Grid& g) {
    ScalarField f(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.nz; ++k) {
                double val = expr(g.x1(i), g.x2(j), g.x3(k));
                if (!std::isfinite(val)) {
                    std::ostringstream os;
                    os << "eval_on_grid: non-finite value at node ("
                       << g.x1(i) << ", " << g.x2(j) << ", " << g.x3(k) << ")";
                    throw std::runtime_error(os.str());
                }
                f(i, j, k) = val;
            }
    return f;
}

HorizontalField eval_on_torus(const std::function<double(double, double)>& expr,
                              const Grid& g) {
    HorizontalField f(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            double val = expr(g.x1(i), g.x2(j));
            if (!std::isfinite(val)) {
                std::ostringstream os;
                os << "eval_on_torus: non-finite value at node ("
                   << g.x1(i) << ", " << g.x2(j) << ")";
                throw std::runtime_error(os.str());
            }
            f(i, j) = val;
        }
    return f;
}

double integrate(const ScalarField& f) {
    const Grid& g = f.grid();
    const double wh = g.dx() * g.dy();
    const double dz = g.dz();
    double sum = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            double col = 0.5 * (f(i, j, 0) + f(i, j, g.nz - 1));
            for (int k = 1; k < g.nz - 1; ++k) col += f(i, j, k);
            sum += col;
        }
    return sum * wh * dz;
}

double integrate(const HorizontalField& f) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) sum += f.data()[n];
    return sum * g.dx() * g.dy();
}

double inner(const ScalarField& a, const ScalarField& b) {
    return integrate(pointwise(a, b));
}

double inner(const HVecField& a, const HVecField& b) {
    return inner(a.x, b.x) + inner(a.y, b.y);
}

} // namespace hydrostat
