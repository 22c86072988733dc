#ifndef HILL_MODEL_HPP
#define HILL_MODEL_HPP

// Rotating-frame planar model with homogeneous potential exponent alpha:
//   V(x,y) = -(alpha+2)/2 x^2 - (alpha+2) r^-alpha,   r = |(x,y)|.
// Both the velocity chart (x,y,xdot,ydot) and the canonical chart
// (x,y,px,py), px = xdot - y, py = ydot + x, are supported.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hill {

struct ModelParams {
    double alpha;   // potential exponent, > 0
    double q0;      // equilibrium radius, alpha^(1/(alpha+2))
    double e_star;  // energy of the equilibria
    bool strong;    // alpha >= 2

    explicit ModelParams(double a)
        : alpha(a),
          q0(std::pow(a, 1.0 / (a + 2.0))),
          e_star(-0.5 * (a + 2.0) * (a + 2.0) * std::pow(a, -a / (a + 2.0))),
          strong(a >= 2.0) {
        if (!(a > 0.0)) throw std::invalid_argument("alpha must be positive");
    }
};

struct CartesianState {
    double x, y, vx, vy;
};

struct SymplecticState {
    double x, y, px, py;
};

// Derivative of a CartesianState: (vx, vy, ax, ay).
struct CartesianDeriv {
    double dx, dy, dvx, dvy;
};

struct SymplecticDeriv {
    double dx, dy, dpx, dpy;
};

inline SymplecticState to_symplectic(const CartesianState& s) {
    return {s.x, s.y, s.vx - s.y, s.vy + s.x};
}

inline CartesianState to_cartesian(const SymplecticState& s) {
    return {s.x, s.y, s.px + s.y, s.py - s.x};
}

// Canonical chart of the equilibria: +(q0,0,0,q0) and its negative.
inline SymplecticState ground_state_tilde(const ModelParams& p, int sigma = +1) {
    return {sigma * p.q0, 0.0, 0.0, sigma * p.q0};
}

double effective_potential(const ModelParams& p, double x, double y);
void potential_gradient(const ModelParams& p, double x, double y, double& vx, double& vy);
void potential_hessian(const ModelParams& p, double x, double y,
                       double& vxx, double& vxy, double& vyy);

double energy(const ModelParams& p, const CartesianState& s);
double energy(const ModelParams& p, const SymplecticState& s);

// W = -x V_x - y V_y = (alpha+2)(x^2 - alpha r^-alpha). Negative on the inner
// bounded region, positive outside.
double scaling_w(const ModelParams& p, double x, double y);
void scaling_w_gradient(const ModelParams& p, double x, double y, double& wx, double& wy);
void scaling_w_hessian(const ModelParams& p, double x, double y,
                       double& wxx, double& wxy, double& wyy);

// K = xdot^2 + ydot^2 + 2(x ydot - xdot y) + W; equals the second time
// derivative of the moment of inertia along solutions.
double virial_k(const ModelParams& p, const CartesianState& s);
double virial_k(const ModelParams& p, const SymplecticState& s);

struct Inertia {
    double i;      // (x^2+y^2)/2
    double i_dot;  // x xdot + y ydot
};
Inertia moment_of_inertia(const CartesianState& s);
Inertia moment_of_inertia(const SymplecticState& s);

CartesianDeriv vector_field(const ModelParams& p, const CartesianState& s);
SymplecticDeriv vector_field(const ModelParams& p, const SymplecticState& s);

// dE/dt along the flow, computed as grad E . field; identically zero, used
// as a conservation check.
double energy_derivative_along_field(const ModelParams& p, const CartesianState& s);

struct Point2 {
    double x, y;
};
using Polyline = std::vector<Point2>;

// Level set {V = c} extracted by marching squares over a window sized to
// contain the equilibria and all catalog radii; vertices are refined along
// grid edges until |V - c| <= 1e-6 |c|.
std::vector<Polyline> hill_region_boundary(const ModelParams& p, double c, int resolution);

// Default half-width of the contour/sampling window.
double default_window_halfwidth(const ModelParams& p);

}  // namespace hill

#endif
