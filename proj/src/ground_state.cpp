#include "hill/ground_state.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <queue>

#include "hill/rng.hpp"

namespace hill {

std::pair<Point2, Point2> lagrange_points(const ModelParams& p) {
    return {Point2{-p.q0, 0.0}, Point2{p.q0, 0.0}};
}

double ground_state_energy(const ModelParams& p) { return p.e_star; }

const char* to_string(CriticalLabel label) {
    switch (label) {
        case CriticalLabel::Gamma0: return "Gamma0";
        case CriticalLabel::Gamma1: return "Gamma1";
        case CriticalLabel::Gamma2Minus: return "Gamma2-";
        case CriticalLabel::Gamma2Plus: return "Gamma2+";
    }
    return "?";
}

double gamma1_energy_ratio(double alpha) {
    return 0.5 * std::pow(alpha + 2.0, (2.0 - alpha) / (alpha + 2.0));
}

namespace {

using Vec4d = Eigen::Vector4d;

Vec4d grad_e(const ModelParams& p, const CartesianState& s) {
    double vx, vy;
    potential_gradient(p, s.x, s.y, vx, vy);
    return {vx, vy, s.vx, s.vy};
}

Vec4d grad_k(const ModelParams& p, const CartesianState& s) {
    double wx, wy;
    scaling_w_gradient(p, s.x, s.y, wx, wy);
    return {2.0 * s.vy + wx, -2.0 * s.vx + wy, 2.0 * s.vx - 2.0 * s.y,
            2.0 * s.vy + 2.0 * s.x};
}

Vec4d grad_w(const ModelParams& p, const CartesianState& s) {
    double wx, wy;
    scaling_w_gradient(p, s.x, s.y, wx, wy);
    return {wx, wy, 0.0, 0.0};
}

Eigen::Matrix4d hess_e(const ModelParams& p, const CartesianState& s) {
    double vxx, vxy, vyy;
    potential_hessian(p, s.x, s.y, vxx, vxy, vyy);
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    h(0, 0) = vxx; h(0, 1) = vxy; h(1, 0) = vxy; h(1, 1) = vyy;
    h(2, 2) = 1.0; h(3, 3) = 1.0;
    return h;
}

Eigen::Matrix4d hess_k(const ModelParams& p, const CartesianState& s) {
    double wxx, wxy, wyy;
    scaling_w_hessian(p, s.x, s.y, wxx, wxy, wyy);
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    h(0, 0) = wxx; h(0, 1) = wxy; h(1, 0) = wxy; h(1, 1) = wyy;
    h(0, 3) = 2.0; h(3, 0) = 2.0;
    h(1, 2) = -2.0; h(2, 1) = -2.0;
    h(2, 2) = 2.0; h(3, 3) = 2.0;
    return h;
}

Eigen::Matrix4d hess_w(const ModelParams& p, const CartesianState& s) {
    double wxx, wxy, wyy;
    scaling_w_hessian(p, s.x, s.y, wxx, wxy, wyy);
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    h(0, 0) = wxx; h(0, 1) = wxy; h(1, 0) = wxy; h(1, 1) = wyy;
    return h;
}

}  // namespace

double lagrange_residual(const ModelParams& p, const CartesianState& s, double lambda) {
    const Vec4d res = grad_e(p, s) - lambda * grad_k(p, s);
    return std::max(res.cwiseAbs().maxCoeff(), std::abs(virial_k(p, s)));
}

std::vector<CriticalPoint> critical_point_catalog(const ModelParams& p) {
    const double a = p.alpha;
    std::vector<CriticalPoint> out;

    {
        CartesianState s{p.q0, 0.0, 0.0, 0.0};
        out.push_back({CriticalLabel::Gamma0, 0.0, s, p.q0, energy(p, s)});
    }
    {
        const double r1 = std::pow(a * (a + 2.0) * (a + 2.0), 1.0 / (a + 2.0));
        const double ar = a * std::pow(r1, -a);
        const double x1 = std::sqrt(ar + 3.0 * r1 * r1 / (4.0 * (a + 2.0)));
        const double y1 = std::sqrt(-ar + (4.0 * a + 5.0) * r1 * r1 / (4.0 * (a + 2.0)));
        CartesianState s{x1, y1, 0.5 * y1, -0.5 * x1};
        out.push_back({CriticalLabel::Gamma1, -0.5, s, r1, energy(p, s)});
    }
    if (a > 2.0) {
        const double r2 = std::pow(a * (a + 2.0) * (a - 2.0) / 4.0, 1.0 / (a + 2.0));
        const double root = std::sqrt((a - 2.0) / (a + 2.0));
        for (int sign : {-1, +1}) {
            const double lambda = 0.5 * (1.0 + sign * root);
            const double c = -2.0 * lambda / (1.0 - 2.0 * lambda);
            CartesianState s{0.0, r2, c * r2, 0.0};
            out.push_back({sign < 0 ? CriticalLabel::Gamma2Minus : CriticalLabel::Gamma2Plus,
                           lambda, s, r2, energy(p, s)});
        }
        // order by energy: Gamma2- below Gamma2+
        std::sort(out.begin() + 2, out.end(),
                  [](const CriticalPoint& l, const CriticalPoint& r) { return l.energy < r.energy; });
    }
    return out;
}

namespace {

struct SampleWindows {
    double r_min, r_max, v_max;
};

SampleWindows sampling_windows(const ModelParams& p) {
    return {1e-3, 4.0 * p.q0 * std::pow(p.alpha + 2.0, 1.0 / (p.alpha + 2.0)),
            3.0 * std::sqrt(2.0 * (std::abs(p.e_star) + 1.0))};
}

CartesianState random_state(Rng& rng, const SampleWindows& w) {
    for (;;) {
        const double x = rng.uniform(-w.r_max, w.r_max);
        const double y = rng.uniform(-w.r_max, w.r_max);
        const double r = std::hypot(x, y);
        if (r < w.r_min || r > w.r_max) continue;
        const double s = rng.uniform(0.0, w.v_max);
        const double th = rng.uniform(0.0, 2.0 * M_PI);
        return {x, y, s * std::cos(th), s * std::sin(th)};
    }
}

// Damped Newton on grad E = 0; the equilibria are its only zeros.
bool newton_to_equilibrium(const ModelParams& p, CartesianState& s) {
    for (int it = 0; it < 60; ++it) {
        const Vec4d g = grad_e(p, s);
        if (g.cwiseAbs().maxCoeff() < 1e-12) return true;
        const Eigen::Matrix4d h = hess_e(p, s);
        Vec4d step = h.partialPivLu().solve(-g);
        double t = 1.0;
        const double g0 = g.squaredNorm();
        for (int bt = 0; bt < 30; ++bt) {
            CartesianState trial{s.x + t * step(0), s.y + t * step(1),
                                 s.vx + t * step(2), s.vy + t * step(3)};
            if (std::hypot(trial.x, trial.y) > 1e-6 &&
                grad_e(p, trial).squaredNorm() < g0) {
                s = trial;
                break;
            }
            t *= 0.5;
            if (bt == 29) return false;
        }
    }
    return grad_e(p, s).cwiseAbs().maxCoeff() < 1e-10;
}

// Penalized gradient descent (Barzilai-Borwein steps) that pushes a sample
// toward the constrained minimum of E on {K >= 0, W <= 0}.
void penalty_descent(const ModelParams& p, CartesianState& s, double mu, int iters) {
    auto grad_phi = [&](const CartesianState& c) {
        const double k = virial_k(p, c);
        const double w = scaling_w(p, c.x, c.y);
        Vec4d g = grad_e(p, c);
        if (k < 0.0) g += mu * 2.0 * k * grad_k(p, c);
        if (w > 0.0) g += mu * 2.0 * w * grad_w(p, c);
        return g;
    };
    auto phi = [&](const CartesianState& c) {
        const double k = std::min(virial_k(p, c), 0.0);
        const double w = std::max(scaling_w(p, c.x, c.y), 0.0);
        return energy(p, c) + mu * (k * k + w * w);
    };

    Vec4d x{s.x, s.y, s.vx, s.vy};
    Vec4d g = grad_phi(s);
    double step = 1e-4 / std::max(1.0, g.norm());
    double fx = phi(s);
    for (int it = 0; it < iters; ++it) {
        Vec4d xn = x - step * g;
        if (std::hypot(xn(0), xn(1)) < 1e-6) break;
        CartesianState cn{xn(0), xn(1), xn(2), xn(3)};
        const double fn = phi(cn);
        if (fn <= fx) {
            const Vec4d gn = grad_phi(cn);
            const Vec4d dx = xn - x, dg = gn - g;
            const double denom = dx.dot(dg);
            step = (denom > 1e-300) ? std::min(dx.squaredNorm() / denom, 1.0) : step * 1.5;
            x = xn;
            g = gn;
            fx = fn;
            if (g.cwiseAbs().maxCoeff() < 1e-12) break;
        } else {
            step *= 0.5;
            if (step < 1e-18) break;
        }
    }
    s = {x(0), x(1), x(2), x(3)};
}

double dist_to_ground(const ModelParams& p, const CartesianState& s) {
    const double dp = std::sqrt((s.x - p.q0) * (s.x - p.q0) + s.y * s.y +
                                s.vx * s.vx + s.vy * s.vy);
    const double dm = std::sqrt((s.x + p.q0) * (s.x + p.q0) + s.y * s.y +
                                s.vx * s.vx + s.vy * s.vy);
    return std::min(dp, dm);
}

}  // namespace

Report verify_variational_infimum(const ModelParams& p, long long samples, std::uint64_t seed) {
    Report rep;
    rep.set("suite", std::string("variational"));
    rep.set("alpha", p.alpha);
    rep.set("e_star", p.e_star);
    rep.set("samples", samples);
    rep.set("seed", static_cast<long long>(seed));

    const SampleWindows w = sampling_windows(p);
    Rng rng(seed, 1);

    // keep the 100 lowest-energy feasible samples
    using Entry = std::pair<double, CartesianState>;
    auto cmp = [](const Entry& l, const Entry& r) { return l.first < r.first; };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> best(cmp);

    long long accepted = 0;
    double min_e = std::numeric_limits<double>::infinity();
    for (long long i = 0; i < samples; ++i) {
        const CartesianState s = random_state(rng, w);
        if (virial_k(p, s) < 0.0 || scaling_w(p, s.x, s.y) > 0.0) continue;
        ++accepted;
        const double e = energy(p, s);
        min_e = std::min(min_e, e);
        if (best.size() < 100) {
            best.emplace(e, s);
        } else if (e < best.top().first) {
            best.pop();
            best.emplace(e, s);
        }
    }
    rep.set("accepted", accepted);
    rep.set("min_energy_sampled", min_e);
    if (accepted == 0) {
        rep.check("feasible_region_nonempty", false);
        return rep;
    }

    // polish the best samples toward the constrained minimum
    int converged = 0;
    double min_e_polished = std::numeric_limits<double>::infinity();
    double max_dist = 0.0;
    while (!best.empty()) {
        CartesianState s = best.top().second;
        best.pop();
        for (double mu : {1e3, 1e5}) penalty_descent(p, s, mu, 400);
        if (dist_to_ground(p, s) < 0.5 * p.q0 && newton_to_equilibrium(p, s)) {
            const double e = energy(p, s);
            if (e < p.e_star + 1e-6) {
                ++converged;
                min_e_polished = std::min(min_e_polished, e);
                max_dist = std::max(max_dist, dist_to_ground(p, s));
            }
        }
    }
    rep.set("minimizers_at_ground", converged);
    rep.set("min_energy_polished", min_e_polished);
    rep.set("max_minimizer_distance", max_dist);

    if (p.strong) {
        rep.check("sampled_min_above_ground", min_e >= p.e_star - 1e-6);
        rep.check("polished_min_above_ground", min_e_polished >= p.e_star - 1e-6);
        rep.check("minimizers_converge_to_ground", converged > 0 && max_dist <= 1e-4);
    }
    return rep;
}

AwaySingularityResult verify_away_from_singularity(const ModelParams& p, double e_cap,
                                                   int grid_resolution) {
    const double a = p.alpha;
    const int nu = 65;

    // Min over velocity of |K| at radius r, position split x^2 = u r^2,
    // subject to E < e_cap. Over speed s and direction the attainable K at
    // fixed (r,u,s) is the interval s^2 + W +- 2rs. The sum W + smax^2 is
    // expanded symbolically: the r^-a terms cancel exactly at a = 2 and must
    // not be formed as a difference of huge floats.
    auto min_abs_k = [&](double r) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        bool feasible = false;
        for (int iu = 0; iu < nu; ++iu) {
            const double u = static_cast<double>(iu) / (nu - 1);
            const double ram = std::pow(r, -a);
            const double v = -0.5 * (a + 2.0) * u * r * r - (a + 2.0) * ram;
            const double smax2 = 2.0 * (e_cap - v);
            if (smax2 <= 0.0) continue;
            feasible = true;
            const double smax = std::sqrt(smax2);
            const double w = (a + 2.0) * (u * r * r - a * ram);
            // w + smax2 = 2 e_cap + 2(a+2) u r^2 + (2-a)(a+2) r^-a
            const double w_plus_smax2 = 2.0 * e_cap + 2.0 * (a + 2.0) * u * r * r +
                                        (2.0 - a) * (a + 2.0) * ram;
            // r * smax through r^2 smax^2, keeping r^(2-a) as one power
            const double r_smax = std::sqrt(2.0 * e_cap * r * r +
                                            (a + 2.0) * u * r * r * r * r +
                                            2.0 * (a + 2.0) * std::pow(r, 2.0 - a));
            const double kmin = (smax >= r) ? w - r * r : w_plus_smax2 - 2.0 * r_smax;
            const double kmax = w_plus_smax2 + 2.0 * r_smax;
            lo = std::min(lo, kmin);
            hi = std::max(hi, kmax);
        }
        if (!feasible) return std::numeric_limits<double>::infinity();
        if (lo > 0.0) return lo;
        if (hi < 0.0) return -hi;
        return 0.0;
    };

    const int n = std::max(grid_resolution, 64);
    const double r_lo = 1e-9, r_hi = p.q0;
    std::vector<double> rs(n), g(n);
    for (int i = 0; i < n; ++i) {
        rs[i] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (n - 1));
        g[i] = min_abs_k(rs[i]);
    }

    // largest c such that g(r) >= c for every grid radius below c
    double c_best = 0.0;
    double running_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        running_min = std::min(running_min, g[i]);
        const double r_next = (i + 1 < n) ? rs[i + 1] : r_hi;
        c_best = std::max(c_best, std::min(running_min, r_next));
    }
    return {c_best >= 1e-6, c_best};
}

KappaResult verify_kappa_delta(const ModelParams& p, double delta, long long samples,
                               std::uint64_t seed) {
    const SampleWindows w = sampling_windows(p);
    const double e_cap = p.e_star - delta;
    Rng rng(seed, 2);

    long long accepted = 0;
    bool all_negative = true;
    double max_k = -std::numeric_limits<double>::infinity();
    CartesianState best{p.q0, 0, 0, 0};

    for (long long i = 0; i < samples; ++i) {
        const double x = rng.uniform(-w.r_max, w.r_max);
        const double y = rng.uniform(-w.r_max, w.r_max);
        const double r = std::hypot(x, y);
        if (r < w.r_min || r > w.r_max) continue;
        if (scaling_w(p, x, y) > 0.0) continue;
        const double v = effective_potential(p, x, y);
        if (v > e_cap) continue;
        const double s = rng.uniform(0.0, std::sqrt(2.0 * (e_cap - v)));
        const double th = rng.uniform(0.0, 2.0 * M_PI);
        const CartesianState c{x, y, s * std::cos(th), s * std::sin(th)};
        ++accepted;
        const double k = virial_k(p, c);
        if (k >= 0.0) all_negative = false;
        if (k > max_k) {
            max_k = k;
            best = c;
        }
    }
    if (accepted == 0) return {0.0, false, 0};

    // Projected ascent of K on {E = e_cap, W <= 0}: step along grad K, then
    // rescale the speed back onto the energy level.
    CartesianState s = best;
    double step = 1e-3;
    double k_cur = virial_k(p, s);
    for (int it = 0; it < 2000; ++it) {
        const Vec4d g = grad_k(p, s);
        Vec4d x{s.x + step * g(0), s.y + step * g(1), s.vx + step * g(2), s.vy + step * g(3)};
        CartesianState trial{x(0), x(1), x(2), x(3)};
        if (std::hypot(trial.x, trial.y) < 1e-6 ||
            scaling_w(p, trial.x, trial.y) > 0.0 ||
            effective_potential(p, trial.x, trial.y) > e_cap) {
            step *= 0.5;
            if (step < 1e-15) break;
            continue;
        }
        const double v = effective_potential(p, trial.x, trial.y);
        const double spd = std::hypot(trial.vx, trial.vy);
        const double target = std::sqrt(2.0 * (e_cap - v));
        if (spd > 1e-14) {
            trial.vx *= target / spd;
            trial.vy *= target / spd;
        } else {
            trial.vx = target;
        }
        const double k_new = virial_k(p, trial);
        if (k_new > k_cur) {
            s = trial;
            k_cur = k_new;
            step *= 1.3;
        } else {
            step *= 0.5;
            if (step < 1e-15) break;
        }
    }
    max_k = std::max(max_k, k_cur);
    if (max_k >= 0.0) all_negative = false;
    return {-max_k, all_negative, accepted};
}

std::vector<TwoConstraintRoot> two_constraint_roots(const ModelParams& p, int starts,
                                                    std::uint64_t seed) {
    using Vec6 = Eigen::Matrix<double, 6, 1>;
    using Mat6 = Eigen::Matrix<double, 6, 6>;

    auto residual = [&](const Vec6& z, Vec6& g) {
        const CartesianState s{z(0), z(1), z(2), z(3)};
        const double lambda = z(4), mu = z(5);
        const Vec4d r = grad_e(p, s) - lambda * grad_k(p, s) - mu * grad_w(p, s);
        g.head<4>() = r;
        g(4) = virial_k(p, s);
        g(5) = scaling_w(p, s.x, s.y);
    };
    auto jacobian = [&](const Vec6& z) {
        const CartesianState s{z(0), z(1), z(2), z(3)};
        const double lambda = z(4), mu = z(5);
        Mat6 j = Mat6::Zero();
        j.block<4, 4>(0, 0) = hess_e(p, s) - lambda * hess_k(p, s) - mu * hess_w(p, s);
        j.block<4, 1>(0, 4) = -grad_k(p, s);
        j.block<4, 1>(0, 5) = -grad_w(p, s);
        j.block<1, 4>(4, 0) = grad_k(p, s).transpose();
        j.block<1, 4>(5, 0) = grad_w(p, s).transpose();
        return j;
    };

    const SampleWindows w = sampling_windows(p);
    const double r1 = std::pow(p.alpha * (p.alpha + 2.0) * (p.alpha + 2.0),
                               1.0 / (p.alpha + 2.0));
    Rng rng(seed, 3);
    std::vector<TwoConstraintRoot> roots;

    for (int i = 0; i < starts; ++i) {
        Vec6 z;
        const double r = rng.uniform(0.2, 1.5 * r1);
        const double th = rng.uniform(0.0, 2.0 * M_PI);
        z << r * std::cos(th), r * std::sin(th), rng.uniform(-w.v_max, w.v_max),
            rng.uniform(-w.v_max, w.v_max), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0);

        bool ok = false;
        Vec6 g;
        for (int it = 0; it < 80; ++it) {
            residual(z, g);
            const double gn = g.cwiseAbs().maxCoeff();
            if (gn < 1e-11) {
                ok = true;
                break;
            }
            Vec6 step = jacobian(z).partialPivLu().solve(-g);
            if (!step.allFinite()) break;
            double t = 1.0;
            const double g0 = g.squaredNorm();
            bool moved = false;
            for (int bt = 0; bt < 25; ++bt) {
                Vec6 zn = z + t * step;
                if (std::hypot(zn(0), zn(1)) > 5e-2) {
                    Vec6 gn2;
                    residual(zn, gn2);
                    if (gn2.squaredNorm() < g0) {
                        z = zn;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if (!moved) break;
        }
        if (!ok) continue;
        // Newton can drift toward the degenerate configuration at infinity
        // (all gradients vanish there); only roots inside the search window
        // are meaningful.
        if (std::hypot(z(0), z(1)) > 3.0 * r1 ||
            std::hypot(z(2), z(3)) > 2.0 * w.v_max)
            continue;
        residual(z, g);
        roots.push_back({CartesianState{z(0), z(1), z(2), z(3)}, z(4), z(5),
                         g.cwiseAbs().maxCoeff()});
    }
    return roots;
}

}  // namespace hill
