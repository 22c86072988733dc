#ifndef HILL_GROUND_STATE_HPP
#define HILL_GROUND_STATE_HPP

// Equilibria, ground-state energy, the catalog of critical points of E on
// {K = 0}, and Monte-Carlo / local-optimization audits of the variational
// characterization of the ground state.

#include <cstdint>
#include <vector>

#include "hill/model.hpp"
#include "hill/report.hpp"

namespace hill {

std::pair<Point2, Point2> lagrange_points(const ModelParams& p);  // (L1, L2)

double ground_state_energy(const ModelParams& p);

enum class CriticalLabel { Gamma0, Gamma1, Gamma2Minus, Gamma2Plus };

const char* to_string(CriticalLabel label);

struct CriticalPoint {
    CriticalLabel label;
    double multiplier;     // lambda in grad E = lambda grad K
    CartesianState state;  // one representative; symmetry copies implied
    double radius;
    double energy;
};

// Gamma0 and Gamma1 always; Gamma2+- only for alpha > 2 (they merge into the
// excluded lambda = 1/2 branch at alpha = 2).
std::vector<CriticalPoint> critical_point_catalog(const ModelParams& p);

// Residual of grad E = lambda grad K at a state, infinity norm, plus |K|.
double lagrange_residual(const ModelParams& p, const CartesianState& s, double lambda);

// E(Gamma1)/E(Gamma0) = (1/2)(alpha+2)^((2-alpha)/(alpha+2)).
double gamma1_energy_ratio(double alpha);

// Rejection-samples {K >= 0, W <= 0}, tracks min E, then polishes the best
// samples with a penalized gradient descent. For alpha >= 2 the report
// asserts min E >= E* - 1e-6 and that successful minimizers land on the
// equilibria; for alpha < 2 it only records the empirical minimum.
Report verify_variational_infimum(const ModelParams& p, long long samples, std::uint64_t seed);

struct AwaySingularityResult {
    bool certified;   // a positive margin radius was found
    double c_found;   // largest c with: r < c excludes {E < e_cap, |K| < c}
};

// Scans small radii, minimizing |K| analytically over velocity direction and
// speed subject to E < e_cap, and returns the largest certified margin.
AwaySingularityResult verify_away_from_singularity(const ModelParams& p, double e_cap,
                                                   int grid_resolution);

struct KappaResult {
    double kappa;        // empirical inf |K| over {E <= E* - delta, W <= 0}
    bool all_k_negative; // K < 0 held on every sample
    long long accepted;
};

// Rejection sampling plus penalized ascent of K from the best samples.
KappaResult verify_kappa_delta(const ModelParams& p, double delta, long long samples,
                               std::uint64_t seed);

// Newton root search of the two-constraint stationarity system
// grad E = lambda grad K + mu grad W, K = 0, W = 0 from random starts.
// Returns converged roots as (state, lambda, mu).
struct TwoConstraintRoot {
    CartesianState state;
    double lambda, mu;
    double residual;
};
std::vector<TwoConstraintRoot> two_constraint_roots(const ModelParams& p, int starts,
                                                    std::uint64_t seed);

}  // namespace hill

#endif
