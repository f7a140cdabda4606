#ifndef HYDROSTAT_OPERATORS_HPP
#define HYDROSTAT_OPERATORS_HPP

#include "hydrostat/domain.hpp"

#include <complex>
#include <map>
#include <memory>
#include <utility>

namespace hydrostat {

// Boundary treatment for vertical second derivatives. Horizontal velocity
// components always carry Neumann conditions; Robin with alpha != 0 applies
// only to temperature-typed scalars at the top boundary (the bottom stays
// Neumann).
struct VerticalBC {
    enum Kind { Neumann, Robin } kind = Neumann;
    double alpha = 0.0;

    static VerticalBC neumann() { return {Neumann, 0.0}; }
    static VerticalBC robin(double alpha) { return {Robin, alpha}; }
};

// Per-grid FFT plans, spectral scratch buffers and the inverse-Laplacian
// multipliers of the horizontal Helmholtz solve. The zero mode k = (0,0) is
// never divided; the solve pins Psi-hat(0) = 0 (the zero-mean normalization).
// Instances are not shareable between threads; the free functions below pull
// a thread-local workspace keyed by grid dimensions.
class ProjectionWorkspace {
public:
    explicit ProjectionWorkspace(const Grid& g);
    ~ProjectionWorkspace();
    ProjectionWorkspace(const ProjectionWorkspace&) = delete;
    ProjectionWorkspace& operator=(const ProjectionWorkspace&) = delete;

    const Grid& grid() const { return grid_; }

    // Batched 2D transforms over all nz levels (ScalarField layout).
    void forward(const ScalarField& f, std::complex<double>* out) const;
    void backward(const std::complex<double>* in, ScalarField& f) const;
    // Single-plane transforms (HorizontalField layout).
    void forward2d(const HorizontalField& f, std::complex<double>* out) const;
    void backward2d(const std::complex<double>* in, HorizontalField& f) const;

    int nyc() const { return grid_.ny / 2 + 1; }
    std::size_t spectral_size() const { return std::size_t(grid_.nx) * nyc() * grid_.nz; }
    std::size_t spectral_size_2d() const { return std::size_t(grid_.nx) * nyc(); }

    std::complex<double>* scratch(int which);
    const std::complex<double>* scratch_const(int which) const;

private:
    struct Impl;
    Grid grid_;
    std::unique_ptr<Impl> impl_;
};

ProjectionWorkspace& workspace_for(const Grid& g);

// --- differential operators (horizontal spectral, vertical second-order FD)

HVecField grad_h(const ScalarField& f);
std::pair<HorizontalField, HorizontalField> grad_h(const HorizontalField& f);
ScalarField div_h(const HVecField& u);
HorizontalField div_h(const HorizontalField& ux, const HorizontalField& uy);
ScalarField deriv_h(const ScalarField& f, int dir); // dir = 1 or 2

// Vertical first derivative: centered interior, one-sided second order at
// the boundary nodes. Makes no assumption on boundary conditions.
ScalarField d3(const ScalarField& f);
HVecField d3(const HVecField& f);

// Vertical second derivative with boundary handling from bc: mirror ghosts
// for Neumann, mirror-with-alpha-correction at the top for Robin.
ScalarField d33_bc(const ScalarField& f, const VerticalBC& bc);
// Conservative flux form d/dx3 (a33 * d/dx3 f); reduces to d33_bc when a33
// is identically one (same code path, see laplace()).
ScalarField d33_flux(const ScalarField& f, const ScalarField& a33, const VerticalBC& bc);

// Full Laplacian: spectral Delta_H plus d33_bc.
ScalarField laplace(const ScalarField& f, const VerticalBC& bc);
HVecField laplace(const HVecField& f); // Neumann only; Robin on HVecField is rejected
HVecField laplace(const HVecField& f, const VerticalBC& bc);

// --- vertical averaging, splitting and the reconstructed vertical velocity

HorizontalField vertical_average(const ScalarField& f);
std::pair<HorizontalField, HorizontalField> vertical_average(const HVecField& f);
// Extends a torus field constantly along x3.
ScalarField lift(const HorizontalField& f);
HVecField lift(const HorizontalField& fx, const HorizontalField& fy);

// v-tilde = v - lift(v-bar). Exact identity v = v-bar + v-tilde.
HVecField fluctuation(const HVecField& v);

// w(v)(x) = -int_{-h}^{x3} div_H v dzeta, cumulative trapezoid from the
// bottom; w(.,-h) = 0 by construction. If the vertical average of div_H v
// vanishes, the top trace vanishes up to quadrature error.
ScalarField w_of_v(const HVecField& v);

// --- projections

struct HelmholtzParts {
    HorizontalField div_free_x, div_free_y;
    HorizontalField grad_x, grad_y;
};

// Horizontal Helmholtz split on T^2: grad part solved exactly per Fourier
// mode, Psi normalized to zero mean.
HelmholtzParts helmholtz_h(const HorizontalField& fx, const HorizontalField& fy);
// The potential Psi_f itself (zero-mean solution of Delta_H Psi = div_H f).
HorizontalField helmholtz_potential(const HorizontalField& fx, const HorizontalField& fy);

// Hydrostatic Helmholtz projection P f = f - Q_H[(1/h) int f dzeta] and its
// complement Q f (an x3-independent gradient field, returned on the torus).
HVecField hydrostatic_project(const HVecField& f);
std::pair<HorizontalField, HorizontalField> hydrostatic_q(const HVecField& f);

// --- traces

HorizontalField trace_top(const ScalarField& f);
HorizontalField trace_bottom(const ScalarField& f);

// --- dealiasing

// Zeroes horizontal modes outside the 2/3 ball (|k1| > nx/3 or |k2| > ny/3).
void dealias(ScalarField& f);
void dealias(HVecField& f);
// Pointwise product followed by the 2/3 truncation of the result.
ScalarField dealiased_product(const ScalarField& a, const ScalarField& b);

// --- quadratic forms used by the energy accounting

// Vertical first-derivative energy on the staggered grid,
//   sum_k dz * |(f_{k+1}-f_k)/dz|^2  integrated horizontally.
// Pairs exactly with d33_bc under the trapezoidal inner product:
//   <f, d33_bc(f)>_w = -staggered_energy(f) - alpha * ||f(.,0)||^2_{T^2}.
double staggered_d3_energy(const ScalarField& f);
// ||grad_H f||^2_{L^2} via spectral derivatives (exact Parseval pairing).
double grad_h_energy(const ScalarField& f);

} // namespace hydrostat

#endif
