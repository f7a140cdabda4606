#ifndef HYDROSTAT_PHYSICS_HPP
#define HYDROSTAT_PHYSICS_HPP

#include "hydrostat/domain.hpp"
#include "hydrostat/noise.hpp"
#include "hydrostat/operators.hpp"

#include <optional>
#include <vector>

namespace hydrostat {

// Deterministic forcing F_v, F_theta. The abstract growth bound
// |F| <= C (Xi + |y| + |z| + |Y|) is reported on request, not enforced; the
// Coriolis variant satisfies it with Xi = 0 and C = |k0|.
struct ForcingSpec {
    enum Kind { Zero, Coriolis, LinearDamping, Tabulated } kind = Zero;
    double k0 = 0.0; // Coriolis parameter
    double c = 0.0;  // damping rate
    std::optional<HVecField> f_v_table;
    std::optional<ScalarField> f_theta_table;
    std::optional<ScalarField> xi_budget;

    static ForcingSpec zero() { return {}; }
    static ForcingSpec coriolis(double k0);
    static ForcingSpec linear_damping(double c);
    static ForcingSpec tabulated(HVecField fv, ScalarField ftheta);

    HVecField f_v(const HVecField& v, const ScalarField& theta) const;
    // Strong-strong signature: F_v may additionally read grad theta. The
    // strong-weak mode ignores that argument, and so do all shipped
    // variants; the overload keeps the two call shapes explicit.
    HVecField f_v(const HVecField& v, const ScalarField& theta,
                  const HVecField& grad_theta_h) const;
    ScalarField f_theta(const HVecField& v, const ScalarField& theta) const;

    // Measured ratio ||F_v(v)|| / (||Xi|| + ||v|| + ||theta|| + ||grad v||),
    // an audit of the growth constant C.
    double growth_audit(const HVecField& v, const ScalarField& theta) const;
};

// Per-mode stochastic forcing fields G_{v,n}, G_{theta,n}; both default to
// zero.
struct GForcing {
    std::vector<HVecField> g_v;
    std::vector<ScalarField> g_theta;

    bool empty() const { return g_v.empty() && g_theta.empty(); }
};

// Variable-viscosity/conductivity coefficients. a-fields are packed
// symmetric (11,12,13,22,23,33); validation checks symmetry implicitly via
// packing, the boundary condition a_theta^{3j} = 0 (j=1,2) at top and
// bottom, and the ellipticity margin a - (1/2) sum phi phi^T >= nu I against
// the supplied basis.
struct CoefficientSet {
    std::array<ScalarField, 6> a_v;
    std::array<ScalarField, 6> a_theta;
    std::array<ScalarField, 3> b_v;
    std::array<ScalarField, 3> b_theta;
    double alpha = 0.0;      // Robin constant for theta
    ScalarField kappa;       // temperature-pressure coupling coefficient
    bool a_v_identity = false;
    bool a_theta_identity = false;
    double ellipticity_margin_v = 0.0;
    double ellipticity_margin_theta = 0.0;
};

// Identity coefficients (a = I, b = 0, kappa = const).
CoefficientSet identity_coefficients(const Grid& g, double alpha, double kappa_const = 1.0);

// Validated construction; throws if the ellipticity margin against the
// basis is not positive or the a_theta^{3j} boundary values fail to vanish.
CoefficientSet make_coefficient_set(std::array<ScalarField, 6> a_v,
                                    std::array<ScalarField, 6> a_theta,
                                    std::array<ScalarField, 3> b_v,
                                    std::array<ScalarField, 3> b_theta, double alpha,
                                    ScalarField kappa, const NoiseBasis& basis);

// Coefficients derived from the Stratonovich conversion: a_v = a_phi,
// a_theta = a_psi, b from the correction drifts.
CoefficientSet strat_derived_coefficients(const StratCoefficients& sc,
                                          const NoiseBasis& basis, double alpha,
                                          double kappa_const = 1.0);

// --- right-hand-side terms

// (v . grad_H) v + w(v) d3 v, horizontal products dealiased by the 2/3 rule.
// Sign convention: this is the term subtracted from the right-hand side.
HVecField nonlinear_v(const HVecField& v);

// (v . grad_H) theta + w(v) d3 theta (strong form).
ScalarField nonlinear_theta(const HVecField& v, const ScalarField& theta);

// Weak form T_theta(phi) = -int (theta v . grad_H phi + theta w(v) d3 phi).
double weak_form_pairing(const HVecField& v, const ScalarField& theta,
                         const ScalarField& phi_test);

// J_kappa theta = grad_H int_{-h}^{x3} kappa theta dzeta.
HVecField j_kappa(const ScalarField& theta, const ScalarField& kappa);

// Turbulent-pressure contributions: per mode n the gradient part
// grad_H Ptilde_n = Q[(phi_n . grad) v (+ G_{v,n})] contracted with gamma_n.
HVecField p_gamma_phi(const HVecField& v, const NoiseBasis& basis);
HVecField p_gamma_full(const HVecField& v, const NoiseBasis& basis, const GForcing& gf);
HVecField p_gamma_G(const GForcing& gf, const NoiseBasis& basis);
// The n-th turbulent pressure itself (zero-mean scalar on the torus).
HorizontalField p_tilde(const HVecField& v, const NoiseBasis& basis, int n);

// --- variable-coefficient operators

// L_v = sum a_v^{ij} d2_{ij} v + sum b_v^j d_j v (non-divergence form,
// Neumann vertical bc).
HVecField apply_Lv(const HVecField& v, const CoefficientSet& coeffs);

// L_theta = sum d_i (a_theta^{ij} d_j theta) + sum b_theta^j d_j theta
// (divergence form, Robin top / Neumann bottom).
ScalarField apply_Ltheta_strong(const ScalarField& theta, const CoefficientSet& coeffs);

// Weak pairing <L_theta^w theta, phi> including the Robin boundary term
// -alpha int a^{33}(.,0) theta(.,0) phi(.,0).
double apply_Ltheta_weak_residual(const ScalarField& theta, const CoefficientSet& coeffs,
                                  const ScalarField& phi_test);

// --- Stratonovich corrections (the drift beyond Delta)

// div(a_psi grad theta) - laplace(theta) - (1/2) sum (div psi_n)(psi_n . grad) theta.
ScalarField strat_correction_theta(const ScalarField& theta, const StratCoefficients& sc,
                                   const NoiseBasis& basis, double alpha);

// L_phi v - laplace(v) + P_phi v (unprojected; the stepper applies P to the
// assembled drift). Requires the x3-independence flag on phi_H.
HVecField strat_correction_v(const HVecField& v, const StratCoefficients& sc,
                             const NoiseBasis& basis);

// The projection commutator P_phi v alone.
HVecField p_phi(const HVecField& v, const StratCoefficients& sc, const NoiseBasis& basis);

// --- stochastic diffusion coefficients

// Per mode: P[(phi_n . grad) v + G_{v,n}] and (psi_n . grad) theta + G_{theta,n}.
std::vector<HVecField> stochastic_diffusion_v(const HVecField& v, const NoiseBasis& basis,
                                              const GForcing& gf);
std::vector<ScalarField> stochastic_diffusion_theta(const ScalarField& theta,
                                                    const NoiseBasis& basis,
                                                    const GForcing& gf);

// (phi_n . grad) f with spectral horizontal and FD vertical derivatives.
ScalarField transport(const std::array<ScalarField, 3>& coeff, const ScalarField& f);
HVecField transport(const std::array<ScalarField, 3>& coeff, const HVecField& f);

} // namespace hydrostat

#endif
