#ifndef HYDROSTAT_DIAGNOSTICS_HPP
#define HYDROSTAT_DIAGNOSTICS_HPP

#include "hydrostat/domain.hpp"
#include "hydrostat/noise.hpp"
#include "hydrostat/operators.hpp"

#include <map>
#include <optional>
#include <string>

namespace hydrostat {

// Running N_k(t; f) = sup_{s<=t} ||f(s)||^2_{H^k} + int_0^t ||f||^2_{H^{k+1}} ds.
// The sup is over the sampled diagnostic times; the integral uses the
// trapezoid rule in time.
struct RunningNorm {
    double sup_sq = 0.0;
    double integral = 0.0;
    double last_hkp1_sq = 0.0;
    bool started = false;

    void update(double hk_sq, double hkp1_sq, double dt_since_last) {
        if (started) integral += 0.5 * dt_since_last * (last_hkp1_sq + hkp1_sq);
        last_hkp1_sq = hkp1_sq;
        sup_sq = std::max(sup_sq, hk_sq);
        started = true;
    }
    double value() const { return sup_sq + integral; }
};

struct DiagnosticsRecord {
    double t = 0.0;
    double N0_v = 0.0;
    double N1_v = 0.0;
    double N0_theta = 0.0;
    double N1_theta = 0.0;
    double X = 0.0;
    double Y = 0.0;
    double robin_energy = 0.0;
    double l4_tilde = 0.0;
    double constraint_residual = 0.0;
    bool blowup_flag = false;

    // Partial sums of the temperature L^2 balance, accumulated per step
    // (left endpoint): 2 int ||grad theta||^2, 2 alpha int ||theta(.,0)||^2,
    // sum_n int ||(psi_n . grad) theta||^2.
    double balance_grad = 0.0;
    double balance_robin = 0.0;
    double balance_noise = 0.0;

    double blowup_functional() const { return N1_v + N0_theta; }
};

// Tracks the four N_k streams between diagnostic samples.
struct NormTracker {
    RunningNorm n0_v, n1_v, n0_theta, n1_theta;
    double last_t = 0.0;
    bool started = false;

    void update(const HVecField& v, const ScalarField& theta, double t);
    void fill(DiagnosticsRecord& rec) const;
};

// X and Y of the intermediate a priori estimate:
//   X = ||v_bar||^2_{H^1(T^2)} + ||d3 v||^2_{L^2} + ||v_tilde||^4_{L^4},
//   Y = ||v_bar||^2_{H^2(T^2)} + ||grad d3 v||^2_{L^2} + || |v_tilde||grad v_tilde| ||^2_{L^2}.
std::pair<double, double> xy_functionals(const HVecField& v);

// F_alpha(theta) = ||grad theta||^2 + alpha ||theta(.,0)||^2_{T^2}, with the
// vertical gradient energy taken on the staggered grid so that
// F_alpha(theta) = -<theta, Delta_discrete theta> holds exactly and the
// discrete energy balance closes without a spatial floor.
double robin_energy(const ScalarField& theta, double alpha);

struct BlowupFlag {
    double t = 0.0;
    double value = 0.0;
    // A discrete flag conflates numerical instability with genuine blow-up;
    // it is labelled numerical and makes no claim about the continuum
    // solution.
    std::string reason = "numerical";
};

struct BlowupMonitor {
    double threshold = 0.0;
    double horizon = 0.0;

    // Flags the first record whose functional exceeds the threshold or whose
    // entries are non-finite. Returns nullopt to continue.
    std::optional<BlowupFlag> check(const DiagnosticsRecord& rec) const;

    static double default_threshold(double initial_functional) {
        return 1e6 * (initial_functional + 1.0);
    }
};

// Named dimensionless residuals of the exact continuum identities,
// evaluated on the given state.
std::map<std::string, double> identity_residuals(const HVecField& v, const ScalarField& theta);

// Kadlec residual |sum ||d2_ij f||^2 - ||Delta f||^2 + 2 beta ||grad_H f(.,0)||^2|
// relative to the magnitude of its terms, with bc-consistent discrete
// operators (beta = 0 reduces to Neumann).
double kadlec_residual(const ScalarField& f, double beta);

// Quadratic forms of the variable-coefficient Kadlec inequality
//   sum_{ijk} int a^{ij} d2_{ik} f d2_{jk} f
//     <= (1+eps) sum_{ij} int a^{ij} d2_{ij} f Delta f + C int f^2 :
// lhs, the first right-hand integral, and ||f||^2. The admissible constant
// C is obtained by brute-force maximization of (lhs - (1+eps) rhs1) / l2
// over a corpus of (a, f) pairs.
struct Kadlec2Forms {
    double lhs = 0.0;
    double rhs1 = 0.0;
    double l2 = 0.0;
};
Kadlec2Forms kadlec2_forms(const ScalarField& f, const std::array<ScalarField, 6>& a,
                           double beta);

// Cancellation residuals |int N(v) . v| and |int N(v,theta) theta| scaled by
// the Cauchy-Schwarz bound of the integrand.
double cancellation_residual_v(const HVecField& v);
double cancellation_residual_theta(const HVecField& v, const ScalarField& theta);

} // namespace hydrostat

#endif
