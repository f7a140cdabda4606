#ifndef HYDROSTAT_DOMAIN_HPP
#define HYDROSTAT_DOMAIN_HPP

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydrostat {

// Discretized flat cylinder T^2 x (-h, 0).
//
// Horizontal directions are periodic with fixed period 2*pi and are resolved
// by Fourier collocation on nx x ny points (powers of two). The vertical
// direction is a boundary-inclusive uniform grid of nz nodes,
//   x3_k = -h + k*dz,  dz = h/(nz-1),  k = 0..nz-1,
// so node 0 is the bottom x3 = -h and node nz-1 is the top x3 = 0.
struct Grid {
    int nx = 0;
    int ny = 0;
    int nz = 0;
    double h = 0.0;

    static constexpr double Lx = 6.283185307179586476925286766559; // 2*pi
    static constexpr double Ly = 6.283185307179586476925286766559;

    double dz() const { return h / (nz - 1); }
    double dx() const { return Lx / nx; }
    double dy() const { return Ly / ny; }

    double x1(int i) const { return Lx * i / nx; }
    double x2(int j) const { return Ly * j / ny; }
    double x3(int k) const { return -h + k * dz(); }

    // Signed integer wavenumbers for the 2*pi-periodic directions.
    int kx(int i) const { return i <= nx / 2 ? i : i - nx; }
    int ky(int j) const { return j <= ny / 2 ? j : j - ny; }

    std::size_t horizontal_size() const { return std::size_t(nx) * ny; }
    std::size_t size() const { return std::size_t(nx) * ny * nz; }

    bool operator==(const Grid& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz && h == o.h;
    }
};

// Validates according to the domain contract: nx, ny powers of two >= 4,
// nz >= 3, h > 0. Throws std::invalid_argument otherwise.
Grid make_grid(int nx, int ny, int nz, double h);

// Scalar field on the cylinder, physical space, x3 varying fastest.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid& g) : grid_(g), v_(g.size(), 0.0) {}
    ScalarField(const Grid& g, double fill) : grid_(g), v_(g.size(), fill) {}

    const Grid& grid() const { return grid_; }

    double& operator()(int i, int j, int k) {
        return v_[(std::size_t(i) * grid_.ny + j) * grid_.nz + k];
    }
    double operator()(int i, int j, int k) const {
        return v_[(std::size_t(i) * grid_.ny + j) * grid_.nz + k];
    }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::size_t size() const { return v_.size(); }

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double c);
    // this += c * o
    ScalarField& axpy(double c, const ScalarField& o);

    bool finite() const;

private:
    Grid grid_;
    std::vector<double> v_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double c, ScalarField a);

// Pointwise product, no dealiasing (see operators.hpp for the dealiased one).
ScalarField pointwise(const ScalarField& a, const ScalarField& b);

// Horizontal vector field (v^1, v^2).
struct HVecField {
    ScalarField x;
    ScalarField y;

    HVecField() = default;
    explicit HVecField(const Grid& g) : x(g), y(g) {}

    const Grid& grid() const { return x.grid(); }

    HVecField& operator+=(const HVecField& o) { x += o.x; y += o.y; return *this; }
    HVecField& operator-=(const HVecField& o) { x -= o.x; y -= o.y; return *this; }
    HVecField& operator*=(double c) { x *= c; y *= c; return *this; }
    HVecField& axpy(double c, const HVecField& o) { x.axpy(c, o.x); y.axpy(c, o.y); return *this; }

    bool finite() const { return x.finite() && y.finite(); }
};

HVecField operator+(HVecField a, const HVecField& b);
HVecField operator-(HVecField a, const HVecField& b);
HVecField operator*(double c, HVecField a);

// Field on the torus T^2 alone (surface pressure, traces, vertical averages).
class HorizontalField {
public:
    HorizontalField() = default;
    explicit HorizontalField(const Grid& g) : grid_(g), v_(g.horizontal_size(), 0.0) {}

    const Grid& grid() const { return grid_; }

    double& operator()(int i, int j) { return v_[std::size_t(i) * grid_.ny + j]; }
    double operator()(int i, int j) const { return v_[std::size_t(i) * grid_.ny + j]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::size_t size() const { return v_.size(); }

    HorizontalField& operator+=(const HorizontalField& o);
    HorizontalField& operator-=(const HorizontalField& o);
    HorizontalField& operator*=(double c);

    bool finite() const;

private:
    Grid grid_;
    std::vector<double> v_;
};

HorizontalField operator+(HorizontalField a, const HorizontalField& b);
HorizontalField operator-(HorizontalField a, const HorizontalField& b);
HorizontalField operator*(double c, HorizontalField a);

// Pointwise evaluation of a closed-form expression at the grid nodes.
// Throws std::runtime_error naming the node coordinates if the expression
// evaluates to a non-finite value.
ScalarField eval_on_grid(const std::function<double(double, double, double)>& expr,
                         const Grid& g);
HorizontalField eval_on_torus(const std::function<double(double, double)>& expr,
                              const Grid& g);

// Continuum-quadrature norms: uniform weights horizontally (exact for
// resolved trigonometric polynomials), trapezoidal weights vertically
// (exact for vertically linear integrands). H^k norms use the spectral/FD
// derivatives of the operators module; tolerances in callers must therefore
// be grid-convergent, not exact.
double l2_norm(const ScalarField& f);
double l2_norm(const HVecField& f);
double l2_norm(const HorizontalField& f);
double l4_norm(const ScalarField& f);
double l4_norm(const HVecField& f);
double h1_norm(const ScalarField& f);
double h1_norm(const HVecField& f);
double hk_norm(const ScalarField& f, int k);
double hk_norm(const HVecField& f, int k);
// 2D Sobolev norms on the torus (used by the X/Y functionals).
double h1_norm(const HorizontalField& f);
double hk_norm(const HorizontalField& f, int k);

// Quadrature of an arbitrary nodal integrand over the cylinder / torus.
double integrate(const ScalarField& f);
double integrate(const HorizontalField& f);
// L^2 inner products under the same quadrature.
double inner(const ScalarField& a, const ScalarField& b);
double inner(const HVecField& a, const HVecField& b);

} // namespace hydrostat

#endif
