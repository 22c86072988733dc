#include "hill/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace hill {

namespace {

inline double radius_checked(double x, double y) {
    const double r = std::hypot(x, y);
    if (r == 0.0) throw std::domain_error("state at the collision singularity (0,0)");
    return r;
}

}  // namespace

double effective_potential(const ModelParams& p, double x, double y) {
    const double r = radius_checked(x, y);
    return -0.5 * (p.alpha + 2.0) * x * x - (p.alpha + 2.0) * std::pow(r, -p.alpha);
}

void potential_gradient(const ModelParams& p, double x, double y, double& vx, double& vy) {
    const double r = radius_checked(x, y);
    const double a = p.alpha;
    const double ram2 = std::pow(r, -a - 2.0);  // r^-(a+2)
    vx = -(a + 2.0) * x + a * (a + 2.0) * x * ram2;
    vy = a * (a + 2.0) * y * ram2;
}

void potential_hessian(const ModelParams& p, double x, double y,
                       double& vxx, double& vxy, double& vyy) {
    const double r = radius_checked(x, y);
    const double a = p.alpha;
    const double ram2 = std::pow(r, -a - 2.0);
    const double ram4 = ram2 / (r * r);
    vxx = -(a + 2.0) + a * (a + 2.0) * ram2 - a * (a + 2.0) * (a + 2.0) * x * x * ram4;
    vxy = -a * (a + 2.0) * (a + 2.0) * x * y * ram4;
    vyy = a * (a + 2.0) * ram2 - a * (a + 2.0) * (a + 2.0) * y * y * ram4;
}

double energy(const ModelParams& p, const CartesianState& s) {
    return 0.5 * (s.vx * s.vx + s.vy * s.vy) + effective_potential(p, s.x, s.y);
}

double energy(const ModelParams& p, const SymplecticState& s) {
    const double u = s.px + s.y;
    const double v = s.py - s.x;
    return 0.5 * (u * u + v * v) + effective_potential(p, s.x, s.y);
}

double scaling_w(const ModelParams& p, double x, double y) {
    const double r = radius_checked(x, y);
    return (p.alpha + 2.0) * (x * x - p.alpha * std::pow(r, -p.alpha));
}

void scaling_w_gradient(const ModelParams& p, double x, double y, double& wx, double& wy) {
    const double r = radius_checked(x, y);
    const double a = p.alpha;
    const double ram2 = std::pow(r, -a - 2.0);
    wx = (a + 2.0) * (2.0 * x + a * a * x * ram2);
    wy = (a + 2.0) * a * a * y * ram2;
}

void scaling_w_hessian(const ModelParams& p, double x, double y,
                       double& wxx, double& wxy, double& wyy) {
    const double r = radius_checked(x, y);
    const double a = p.alpha;
    const double ram2 = std::pow(r, -a - 2.0);
    const double ram4 = ram2 / (r * r);
    wxx = (a + 2.0) * (2.0 + a * a * ram2 - a * a * (a + 2.0) * x * x * ram4);
    wxy = -(a + 2.0) * a * a * (a + 2.0) * x * y * ram4;
    wyy = (a + 2.0) * (a * a * ram2 - a * a * (a + 2.0) * y * y * ram4);
}

double virial_k(const ModelParams& p, const CartesianState& s) {
    return s.vx * s.vx + s.vy * s.vy + 2.0 * (s.x * s.vy - s.vx * s.y) +
           scaling_w(p, s.x, s.y);
}

double virial_k(const ModelParams& p, const SymplecticState& s) {
    const double r = radius_checked(s.x, s.y);
    const double a = p.alpha;
    return s.px * s.px + s.py * s.py + (a + 1.0) * s.x * s.x - s.y * s.y -
           a * (a + 2.0) * std::pow(r, -a);
}

Inertia moment_of_inertia(const CartesianState& s) {
    return {0.5 * (s.x * s.x + s.y * s.y), s.x * s.vx + s.y * s.vy};
}

Inertia moment_of_inertia(const SymplecticState& s) {
    return {0.5 * (s.x * s.x + s.y * s.y), s.x * s.px + s.y * s.py};
}

CartesianDeriv vector_field(const ModelParams& p, const CartesianState& s) {
    double vx, vy;
    potential_gradient(p, s.x, s.y, vx, vy);
    return {s.vx, s.vy, 2.0 * s.vy - vx, -2.0 * s.vx - vy};
}

SymplecticDeriv vector_field(const ModelParams& p, const SymplecticState& s) {
    double vx, vy;
    potential_gradient(p, s.x, s.y, vx, vy);
    const double xdot = s.px + s.y;
    const double ydot = s.py - s.x;
    return {xdot, ydot, ydot - vx, -xdot - vy};
}

double energy_derivative_along_field(const ModelParams& p, const CartesianState& s) {
    double vx, vy;
    potential_gradient(p, s.x, s.y, vx, vy);
    const CartesianDeriv f = vector_field(p, s);
    return vx * f.dx + vy * f.dy + s.vx * f.dvx + s.vy * f.dvy;
}

double default_window_halfwidth(const ModelParams& p) {
    return 3.0 * p.q0 * std::pow(p.alpha + 2.0, 1.0 / (p.alpha + 2.0));
}

namespace {

// Refine a level-set crossing along the segment (x0,y0)-(x1,y1) until
// |V - c| <= tol at the returned point. Endpoints must bracket c.
Point2 refine_on_edge(const ModelParams& p, double c, double tol,
                      double x0, double y0, double f0,
                      double x1, double y1, double f1) {
    double t0 = 0.0, t1 = 1.0;
    for (int it = 0; it < 80; ++it) {
        const double tm = 0.5 * (t0 + t1);
        const double xm = x0 + tm * (x1 - x0);
        const double ym = y0 + tm * (y1 - y0);
        const double fm = effective_potential(p, xm, ym) - c;
        if (std::abs(fm) <= tol) return {xm, ym};
        if ((fm < 0.0) == (f0 < 0.0)) {
            t0 = tm;
            f0 = fm;
        } else {
            t1 = tm;
            f1 = fm;
        }
    }
    const double tm = 0.5 * (t0 + t1);
    return {x0 + tm * (x1 - x0), y0 + tm * (y1 - y0)};
}

// Edge key: (i,j) cell corner index plus orientation, unique per grid edge.
inline long long edge_key(int i, int j, int horizontal, int n) {
    return (static_cast<long long>(j) * (n + 1) + i) * 2 + horizontal;
}

}  // namespace

std::vector<Polyline> hill_region_boundary(const ModelParams& p, double c, int resolution) {
    if (resolution < 16) throw std::invalid_argument("resolution must be >= 16");
    const int n = resolution;
    const double half = default_window_halfwidth(p);
    const double h = 2.0 * half / n;
    const double tol = 1e-6 * std::max(std::abs(c), 1e-300);

    // Sample V at grid nodes. The origin is singular; V -> -inf there, so a
    // node exactly at (0,0) is nudged by a quarter cell.
    std::vector<double> f(static_cast<size_t>(n + 1) * (n + 1));
    auto node = [&](int i, int j) { return static_cast<size_t>(j) * (n + 1) + i; };
    std::vector<double> xs(n + 1), ys(n + 1);
    for (int i = 0; i <= n; ++i) xs[i] = -half + i * h;
    for (int j = 0; j <= n; ++j) ys[j] = -half + j * h;
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            double x = xs[i], y = ys[j];
            if (x == 0.0 && y == 0.0) x = 0.25 * h;
            f[node(i, j)] = effective_potential(p, x, y) - c;
        }
    }

    // Vertex on a grid edge, bisection-refined; cached so adjacent cells share
    // the exact same point.
    std::map<long long, int> edge_vertex;
    std::vector<Point2> verts;
    auto vertex_on_edge = [&](int i0, int j0, int i1, int j1) {
        const int horizontal = (j0 == j1) ? 1 : 0;
        const long long key = edge_key(std::min(i0, i1), std::min(j0, j1), horizontal, n);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        const Point2 v = refine_on_edge(p, c, tol, xs[i0], ys[j0], f[node(i0, j0)],
                                        xs[i1], ys[j1], f[node(i1, j1)]);
        verts.push_back(v);
        edge_vertex.emplace(key, static_cast<int>(verts.size()) - 1);
        return static_cast<int>(verts.size()) - 1;
    };

    // Marching squares, segments as vertex-index pairs.
    std::vector<std::array<int, 2>> segs;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double f00 = f[node(i, j)], f10 = f[node(i + 1, j)];
            const double f01 = f[node(i, j + 1)], f11 = f[node(i + 1, j + 1)];
            int config = (f00 < 0.0 ? 1 : 0) | (f10 < 0.0 ? 2 : 0) |
                         (f11 < 0.0 ? 4 : 0) | (f01 < 0.0 ? 8 : 0);
            if (config == 0 || config == 15) continue;
            const int bottom = (((f00 < 0.0) != (f10 < 0.0)))
                                   ? vertex_on_edge(i, j, i + 1, j) : -1;
            const int top = (((f01 < 0.0) != (f11 < 0.0)))
                                ? vertex_on_edge(i, j + 1, i + 1, j + 1) : -1;
            const int left = (((f00 < 0.0) != (f01 < 0.0)))
                                 ? vertex_on_edge(i, j, i, j + 1) : -1;
            const int right = (((f10 < 0.0) != (f11 < 0.0)))
                                  ? vertex_on_edge(i + 1, j, i + 1, j + 1) : -1;
            switch (config) {
                case 1: case 14: segs.push_back({left, bottom}); break;
                case 2: case 13: segs.push_back({bottom, right}); break;
                case 3: case 12: segs.push_back({left, right}); break;
                case 4: case 11: segs.push_back({right, top}); break;
                case 6: case 9:  segs.push_back({bottom, top}); break;
                case 7: case 8:  segs.push_back({left, top}); break;
                case 5: case 10: {
                    // Saddle cell: disambiguate with the center value.
                    const double xc = xs[i] + 0.5 * h, yc = ys[j] + 0.5 * h;
                    const double fc = effective_potential(p, xc == 0.0 && yc == 0.0 ? 0.25 * h : xc, yc) - c;
                    const bool center_in = fc < 0.0;
                    if ((config == 5) == center_in) {
                        segs.push_back({left, top});
                        segs.push_back({right, bottom});
                    } else {
                        segs.push_back({left, bottom});
                        segs.push_back({right, top});
                    }
                    break;
                }
                default: break;
            }
        }
    }

    // Chain segments into polylines by shared vertices.
    std::multimap<int, int> incident;  // vertex -> segment index
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        incident.emplace(segs[s][0], s);
        incident.emplace(segs[s][1], s);
    }
    std::vector<char> used(segs.size(), 0);
    auto next_segment = [&](int v, int exclude) {
        auto range = incident.equal_range(v);
        for (auto it = range.first; it != range.second; ++it)
            if (!used[it->second] && it->second != exclude) return it->second;
        return -1;
    };

    std::vector<Polyline> out;
    for (int s0 = 0; s0 < static_cast<int>(segs.size()); ++s0) {
        if (used[s0]) continue;
        used[s0] = 1;
        std::vector<int> chain = {segs[s0][0], segs[s0][1]};
        // extend forward
        for (;;) {
            const int s = next_segment(chain.back(), -1);
            if (s < 0) break;
            used[s] = 1;
            chain.push_back(segs[s][0] == chain.back() ? segs[s][1] : segs[s][0]);
        }
        // extend backward
        for (;;) {
            const int s = next_segment(chain.front(), -1);
            if (s < 0) break;
            used[s] = 1;
            chain.insert(chain.begin(),
                         segs[s][0] == chain.front() ? segs[s][1] : segs[s][0]);
        }
        Polyline poly;
        poly.reserve(chain.size());
        for (int v : chain) poly.push_back(verts[v]);
        out.push_back(std::move(poly));
    }
    return out;
}

}  // namespace hill
