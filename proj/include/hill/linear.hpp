#ifndef HILL_LINEAR_HPP
#define HILL_LINEAR_HPP

// Linearization at the equilibria in the canonical chart: Hessian,
// saddle-center eigenstructure, normalized symplectic basis, decomposition of
// nearby states, the linearized energy norm and the distance function d_Q.

#include <Eigen/Dense>

#include <cstdint>

#include "hill/model.hpp"
#include "hill/report.hpp"

namespace hill {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

inline Vec4 to_vec(const SymplecticState& s) { return {s.x, s.y, s.px, s.py}; }
inline SymplecticState to_state(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }

// J = [[0, I], [-I, 0]]
Mat4 symplectic_j();

// Omega(u, v) = (J u) . v; antisymmetric, Omega(e1, e3) = -1.
double symplectic_form(const Vec4& u, const Vec4& v);

// Closed-form Hessian of E at the equilibria (equal at both, which is what
// makes a single basis serve near either ground state).
Mat4 hessian_at_ground(const ModelParams& p);

struct EigenRates {
    double k;      // hyperbolic rate
    double omega;  // center rotation rate
};
EigenRates eigenrates(const ModelParams& p);

struct SymplecticBasis {
    double k = 0, omega = 0;
    Vec4 xi_plus, xi_minus;  // A xi_+- = +-k xi_+-, Omega(xi+, xi-) = 1, |xi+| = |xi-|
    Vec4 eta1, eta2;         // A eta1 = omega eta2, A eta2 = -omega eta1, Omega(eta1, eta2) = 1
    Mat4 hessian;            // grad^2 E at the equilibrium
    Mat4 a_matrix;           // A = J grad^2 E

    // Columns (xi+, eta1, xi-, eta2). Its Omega-Gram matrix equals J.
    Mat4 basis_matrix() const;
};

// Builds the normalized basis. The scale freedom is fixed by
// Omega(xi+, xi-) = 1, |xi+| = |xi-| and Omega(Q0, xi+) > 0 with
// Q0 = (-q0, 0, 0, q0). Throws on eigensolver residual > 1e-9.
SymplecticBasis build_basis(const ModelParams& p);

struct Decomposition {
    int sigma = +1;              // nearest ground state
    bool sigma_ambiguous = false;
    Vec4 x;                      // sigma*psi - Q~
    double lambda_plus = 0, lambda_minus = 0;
    Vec4 gamma;                  // center-plane component
    double a = 0, b = 0;         // gamma = a eta1 + b eta2
    double lambda1 = 0, lambda2 = 0;
    double x_norm_e = 0;         // |X|_E
    double c_rem = 0;            // E(psi) - E(Q~) + (k/2)(l+ + l-)^2 - |X|_E^2
};

Decomposition decompose(const SymplecticBasis& basis, const ModelParams& p,
                        const SymplecticState& psi);
// Same, with the ground-state choice forced.
Decomposition decompose_sigma(const SymplecticBasis& basis, const ModelParams& p,
                              const SymplecticState& psi, int sigma);

// C^2 cutoff: 1 on |r| <= 1, 0 on |r| >= 2, monotone between.
double cutoff_chi(double r);

struct Calibration {
    double delta_e = 0;  // radius where the cubic remainder is <= |X|_E^2/10
    double delta_x = 0;  // delta_e / 4
    double c_star = 0;   // ejection sign constant (measured)
    double t_star = 0;   // ejection monotonicity constant (measured)
    double delta_s() const { return c_star > 0 ? delta_x / (2.0 * c_star) : 0.0; }
};

struct DqResult {
    double d_plus, d_minus, d_q;
    int sigma;
};

// d_sigma = sqrt(|X|_E^2 + chi(|X|_E / 2 delta_e) C); d_Q = min over sigma.
// Radicands below -1e-14 (beyond rounding) throw; tiny negatives clamp to 0.
DqResult distance_dq(const SymplecticBasis& basis, const ModelParams& p,
                     const Calibration& cal, const SymplecticState& psi);

// Largest delta_e <= 0.5 such that |C(psi)| <= |X|_E^2 / 10 over sampled
// states with |X|_E <= 4 delta_e. Throws if none >= 1e-4 certifies.
double calibrate_delta_e(const SymplecticBasis& basis, const ModelParams& p,
                         int samples, std::uint64_t seed);

struct Remainder {
    Vec4 n;                      // F(Q~+X) - A X
    double n_plus, n_minus;      // projections driving lambda_+-
    double n1, n2;               // combinations driving lambda_1/lambda_2
};
Remainder nonlinear_remainder(const SymplecticBasis& basis, const ModelParams& p,
                              const Vec4& x);

struct VarEstimate {
    double eps;        // energy margin: sign dichotomy certified below E* + eps^2
    double kappa;      // min |W| observed on {d_Q >= delta, E < E* + eps^2}
    bool dichotomy_ok; // W < 0 implied K < 0 on every sample
};
VarEstimate calibrate_var_df(const SymplecticBasis& basis, const ModelParams& p,
                             const Calibration& cal, double delta, int samples,
                             std::uint64_t seed);

// Continuous +-1 label: sign(lambda1) near the ground states, sign(W) away
// from them; the two branches must agree on the overlap. sign(0) = +1.
// Throws std::domain_error outside {E < E* + min(d_Q^2/2, eps^2)}.
int sign_function(const SymplecticBasis& basis, const ModelParams& p,
                  const Calibration& cal, const SymplecticState& psi, double delta,
                  double eps_delta);

// Sample a state Q~ + X with decomposition coordinates uniform in the
// |X|_E <= radius ball; used by calibrations and tests.
Vec4 sample_x_in_norm_ball(const SymplecticBasis& basis, class Rng& rng, double radius);

// Serialize basis + calibration to a key = value document and back.
Report basis_document(const ModelParams& p, const SymplecticBasis& basis,
                      const Calibration& cal);

}  // namespace hill

#endif
