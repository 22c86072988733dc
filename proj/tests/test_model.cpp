#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <queue>

#include "hill/model.hpp"
#include "hill/rng.hpp"
#include "oracles.hpp"

using namespace hill;
using namespace hill::testing;

TEST_CASE("model parameters") {
    for (double a : {0.5, 1.0, 2.0, 3.0, 5.0, 10.0}) {
        const ModelParams p(a);
        CHECK(std::abs(std::pow(p.q0, a + 2.0) - a) <= 1e-12 * a);
        const double e_star = -0.5 * (a + 2.0) * (a + 2.0) * std::pow(a, -a / (a + 2.0));
        CHECK(p.e_star == doctest::Approx(e_star).epsilon(1e-12));
        CHECK(p.strong == (a >= 2.0));
    }
    CHECK_THROWS_AS(ModelParams(0.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(-1.0), std::invalid_argument);
}

TEST_CASE("effective potential values") {
    const ModelParams p1(1.0);
    CHECK(effective_potential(p1, 1.0, 0.0) == doctest::Approx(-4.5).epsilon(1e-14));
    const ModelParams p2(2.0);
    CHECK(effective_potential(p2, std::pow(2.0, 0.25), 0.0) ==
          doctest::Approx(-4.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(effective_potential(p1, 0.0, 0.0), std::domain_error);

    Rng rng(7, 0);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-3, 3), y = rng.uniform(-3, 3);
        if (std::hypot(x, y) < 1e-3) continue;
        CHECK(effective_potential(p2, x, y) == effective_potential(p2, -x, y));
        CHECK(effective_potential(p2, x, y) == effective_potential(p2, x, -y));
    }
}

TEST_CASE("potential gradient and hessian match finite differences") {
    const ModelParams p(3.0);
    Rng rng(11, 0);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform(0.3, 2.5) * (rng.unit() < 0.5 ? -1 : 1);
        const double y = rng.uniform(0.3, 2.5) * (rng.unit() < 0.5 ? -1 : 1);
        double vx, vy;
        potential_gradient(p, x, y, vx, vy);
        const double fx = fd_derivative([&](double t) { return effective_potential(p, t, y); }, x, 1e-4);
        const double fy = fd_derivative([&](double t) { return effective_potential(p, x, t); }, y, 1e-4);
        CHECK(vx == doctest::Approx(fx).epsilon(1e-8));
        CHECK(vy == doctest::Approx(fy).epsilon(1e-8));

        double vxx, vxy, vyy;
        potential_hessian(p, x, y, vxx, vxy, vyy);
        double gx1, gy1;
        const double fxx = fd_derivative(
            [&](double t) { double a, b; potential_gradient(p, t, y, a, b); return a; }, x, 1e-4);
        const double fxy = fd_derivative(
            [&](double t) { double a, b; potential_gradient(p, x, t, a, b); return a; }, y, 1e-4);
        const double fyy = fd_derivative(
            [&](double t) { double a, b; potential_gradient(p, x, t, a, b); return b; }, y, 1e-4);
        (void)gx1; (void)gy1;
        CHECK(vxx == doctest::Approx(fxx).epsilon(1e-7));
        CHECK(vxy == doctest::Approx(fxy).epsilon(1e-7));
        CHECK(vyy == doctest::Approx(fyy).epsilon(1e-7));
    }
}

TEST_CASE("energy at the equilibria and additivity of kinetic term") {
    for (double a : {1.0, 2.0, 3.0}) {
        const ModelParams p(a);
        for (int s : {-1, +1}) {
            const CartesianState q{s * p.q0, 0.0, 0.0, 0.0};
            CHECK(energy(p, q) == doctest::Approx(p.e_star).epsilon(1e-13));
        }
        const CartesianState moving{p.q0, 0.0, 0.3, -0.4};
        CHECK(energy(p, moving) ==
              doctest::Approx(p.e_star + 0.5 * (0.09 + 0.16)).epsilon(1e-13));
    }
}

TEST_CASE("chart agreement of E, K, I-dot on random states") {
    const ModelParams p(2.0);
    Rng rng(13, 0);
    for (int i = 0; i < 2000; ++i) {
        const CartesianState c = random_cartesian(rng, 0.05, 4.0, 6.0);
        const SymplecticState s = to_symplectic(c);
        CHECK(energy(p, c) == doctest::Approx(energy(p, s)).epsilon(1e-13));
        CHECK(virial_k(p, c) == doctest::Approx(virial_k(p, s)).epsilon(1e-13));
        const Inertia ic = moment_of_inertia(c);
        const Inertia is = moment_of_inertia(s);
        CHECK(ic.i == doctest::Approx(is.i).epsilon(1e-14));
        CHECK(ic.i_dot == doctest::Approx(is.i_dot).epsilon(1e-14));
    }
}

TEST_CASE("scaling function W") {
    const ModelParams p1(1.0);
    for (int s : {-1, +1})
        CHECK(scaling_w(p1, s * p1.q0, 0.0) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(scaling_w(p1, 0.1, 0.0) == doctest::Approx(3.0 * (0.01 - 10.0)).epsilon(1e-13));
    CHECK(scaling_w(p1, 10.0, 0.0) > 0.0);

    // gradient oracle
    Rng rng(17, 0);
    const ModelParams p(2.5);
    for (int i = 0; i < 30; ++i) {
        const double x = rng.uniform(0.2, 2.0), y = rng.uniform(0.2, 2.0);
        double wx, wy;
        scaling_w_gradient(p, x, y, wx, wy);
        CHECK(wx == doctest::Approx(fd_derivative(
                        [&](double t) { return scaling_w(p, t, y); }, x, 1e-4)).epsilon(1e-8));
        CHECK(wy == doctest::Approx(fd_derivative(
                        [&](double t) { return scaling_w(p, x, t); }, y, 1e-4)).epsilon(1e-8));
    }
}

TEST_CASE("virial K vanishes at the equilibria") {
    for (double a : {1.0, 2.0, 3.0, 5.0}) {
        const ModelParams p(a);
        for (int s : {-1, +1}) {
            CHECK(virial_k(p, CartesianState{s * p.q0, 0, 0, 0}) ==
                  doctest::Approx(0.0).epsilon(1e-12));
            CHECK(virial_k(p, ground_state_tilde(p, s)) ==
                  doctest::Approx(0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("moment of inertia") {
    for (double a : {1.0, 2.0}) {
        const ModelParams p(a);
        for (int s : {-1, +1})
            CHECK(moment_of_inertia(ground_state_tilde(p, s)).i_dot ==
                  doctest::Approx(0.0).epsilon(1e-14));
    }
    Rng rng(19, 0);
    for (int i = 0; i < 100; ++i) {
        const double th = rng.uniform(0, 2 * M_PI);
        const CartesianState c{2.0 * std::cos(th), 2.0 * std::sin(th), 0.1, -0.2};
        CHECK(moment_of_inertia(c).i == doctest::Approx(2.0).epsilon(1e-14));
    }
}

TEST_CASE("vector field at equilibria and chart conjugation") {
    for (double a : {1.0, 2.0, 3.0}) {
        const ModelParams p(a);
        for (int s : {-1, +1}) {
            const CartesianDeriv f = vector_field(p, CartesianState{s * p.q0, 0, 0, 0});
            CHECK(std::abs(f.dx) <= 1e-12);
            CHECK(std::abs(f.dy) <= 1e-12);
            CHECK(std::abs(f.dvx) <= 1e-12);
            CHECK(std::abs(f.dvy) <= 1e-12);
            const SymplecticDeriv g = vector_field(p, ground_state_tilde(p, s));
            CHECK(std::abs(g.dx) <= 1e-12);
            CHECK(std::abs(g.dpy) <= 1e-12);
        }
    }
    const ModelParams p(2.0);
    Rng rng(23, 0);
    for (int i = 0; i < 1000; ++i) {
        const CartesianState c = random_cartesian(rng, 0.05, 4.0, 6.0);
        const SymplecticState s = to_symplectic(c);
        const CartesianDeriv fc = vector_field(p, c);
        const SymplecticDeriv fs = vector_field(p, s);
        // vx = px + y, vy = py - x, so their rates must be consistent
        CHECK(fc.dx == doctest::Approx(fs.dx).epsilon(1e-12));
        CHECK(fc.dy == doctest::Approx(fs.dy).epsilon(1e-12));
        CHECK(fc.dvx == doctest::Approx(fs.dpx + fs.dy).epsilon(1e-12));
        CHECK(fc.dvy == doctest::Approx(fs.dpy - fs.dx).epsilon(1e-12));
    }
}

TEST_CASE("energy is a first integral: grad E . field = 0 at 10^4 states") {
    const ModelParams p(2.0);
    Rng rng(29, 0);
    for (int i = 0; i < 10000; ++i) {
        const CartesianState c = random_cartesian(rng, 0.05, 4.0, 6.0);
        CHECK(std::abs(energy_derivative_along_field(p, c)) <= 1e-12 * (1.0 + std::abs(energy(p, c))));
    }
}

TEST_CASE("point reflection symmetry") {
    const ModelParams p(3.0);
    Rng rng(31, 0);
    for (int i = 0; i < 500; ++i) {
        const CartesianState c = random_cartesian(rng, 0.05, 4.0, 6.0);
        const CartesianState m{-c.x, -c.y, -c.vx, -c.vy};
        CHECK(energy(p, c) == energy(p, m));
        CHECK(virial_k(p, c) == virial_k(p, m));
        CHECK(scaling_w(p, c.x, c.y) == scaling_w(p, m.x, m.y));
        const CartesianDeriv f = vector_field(p, c);
        const CartesianDeriv g = vector_field(p, m);
        CHECK(g.dx == -f.dx);
        CHECK(g.dy == -f.dy);
        CHECK(g.dvx == -f.dvx);
        CHECK(g.dvy == -f.dvy);
    }
}

TEST_CASE("chart round trips") {
    const ModelParams p(1.0);
    const SymplecticState q = to_symplectic(CartesianState{p.q0, 0, 0, 0});
    CHECK(q.x == p.q0);
    CHECK(q.px == 0.0);
    CHECK(q.py == p.q0);
    const SymplecticState s = to_symplectic(CartesianState{0, 1, 0, 0});
    CHECK(s.px == -1.0);
    CHECK(s.py == 0.0);

    Rng rng(37, 0);
    for (int i = 0; i < 1000; ++i) {
        const CartesianState c = random_cartesian(rng, 0.05, 4.0, 6.0);
        const CartesianState back = to_cartesian(to_symplectic(c));
        CHECK(back.x == doctest::Approx(c.x).epsilon(1e-15));
        CHECK(back.vx == doctest::Approx(c.vx).epsilon(1e-15));
        CHECK(back.vy == doctest::Approx(c.vy).epsilon(1e-15));
    }
}

namespace {

// Flood-fill connectivity of {V <= c} on a sampled grid; independent of the
// marching-squares extraction it cross-checks.
bool same_component(const ModelParams& p, double c, double ax, double ay, double bx,
                    double by) {
    const int n = 320;
    const double half = default_window_halfwidth(p);
    const double h = 2.0 * half / n;
    auto inside = [&](int i, int j) {
        double x = -half + i * h, y = -half + j * h;
        if (x == 0.0 && y == 0.0) x = 0.25 * h;
        return effective_potential(p, x, y) <= c;
    };
    auto index = [&](double x, double y) {
        return std::pair<int, int>{static_cast<int>((x + half) / h),
                                   static_cast<int>((y + half) / h)};
    };
    const auto [ai, aj] = index(ax, ay);
    const auto [bi, bj] = index(bx, by);
    REQUIRE(inside(ai, aj));
    REQUIRE(inside(bi, bj));
    std::vector<char> seen(static_cast<size_t>(n + 1) * (n + 1), 0);
    std::queue<std::pair<int, int>> q;
    q.push({ai, aj});
    seen[static_cast<size_t>(aj) * (n + 1) + ai] = 1;
    while (!q.empty()) {
        const auto [i, j] = q.front();
        q.pop();
        if (i == bi && j == bj) return true;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int ii = i + di[d], jj = j + dj[d];
            if (ii < 0 || jj < 0 || ii > n || jj > n) continue;
            auto& flag = seen[static_cast<size_t>(jj) * (n + 1) + ii];
            if (flag || !inside(ii, jj)) continue;
            flag = 1;
            q.push({ii, jj});
        }
    }
    return false;
}

}  // namespace

TEST_CASE("hill region boundary: neck topology across the ground-state energy") {
    const ModelParams p(1.0);
    // below the ground-state energy the inner region is sealed off
    CHECK_FALSE(same_component(p, -4.6, 0.0, 0.0, 2.0, 0.0));
    // above it a single component joins inner and outer regions
    CHECK(same_component(p, -4.4, 0.0, 0.0, 2.0, 0.0));
}

TEST_CASE("hill region boundary: vertex accuracy and critical level") {
    const ModelParams p(1.0);
    for (double c : {-4.6, -4.4}) {
        const auto polys = hill_region_boundary(p, c, 256);
        CHECK(!polys.empty());
        for (const auto& poly : polys)
            for (const auto& v : poly)
                CHECK(std::abs(effective_potential(p, v.x, v.y) - c) <= 1e-6 * std::abs(c));
    }
    // at c = E* the curve pinches at the equilibria
    const auto polys = hill_region_boundary(p, p.e_star, 256);
    double dmin = 1e9;
    for (const auto& poly : polys)
        for (const auto& v : poly)
            dmin = std::min(dmin, std::hypot(v.x - p.q0, v.y));
    const double cell = 2.0 * default_window_halfwidth(p) / 256;
    CHECK(dmin <= 3.0 * cell);
}

TEST_CASE("hill region boundary rejects tiny resolutions") {
    const ModelParams p(1.0);
    CHECK_THROWS_AS(hill_region_boundary(p, -4.5, 8), std::invalid_argument);
}
